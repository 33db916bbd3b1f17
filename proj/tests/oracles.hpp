#pragma once

// Hand-evaluated fixtures shared by the unit tests and the acceptance
// binary. Every expected value below was derived by hand from the
// definitions, not by running the library.

#include <string>
#include <vector>

namespace oracles {

struct BleuFixture {
  std::string candidate;
  std::string reference;
  double expected;
};

// p_n: clipped n-gram precision, add-one on both sides for n >= 2;
// score = 100 * exp(mean log p_n) * BP, BP = exp(1 - r/c) when c < r.
inline const std::vector<BleuFixture> kBleu = {
    // p = 3/3, 3/3, 2/2, 1/1; BP = exp(1 - 4/3)
    {"the cat sat", "the cat sat down", 71.65313105737893},
    // exact match
    {"a b c d e", "a b c d e", 100.0},
    // p1 = 1/3 (clipped), p2 = (0+1)/(2+1), p3 = (0+1)/(1+1), p4 = 1/1; BP = 1
    // 100 * (1/18)^(1/4)
    {"the the the", "the cat", 48.54917717073234},
    // p1 = 3/4, p2 = (1+1)/(3+1), p3 = (0+1)/(2+1), p4 = (0+1)/(1+1); BP = exp(1 - 5/4)
    // 100 * (1/16)^(1/4) * exp(-1/4)
    {"a b c d", "a b x d e", 38.94003915357025},
    // no unigram overlap: p1 = 0
    {"x y", "a b c", 0.0},
};

struct ConfusionFixture {
  // 1 = positive (inconsistent), 0 = negative
  std::vector<int> preds;
  std::vector<int> labels;
  double precision, recall, f1, accuracy;
};

inline const std::vector<ConfusionFixture> kConfusion = {
    // tp=2 fp=1 fn=1 tn=0: P = R = 2/3, F1 = 2/3, Acc = 2/4
    {{1, 1, 1, 0}, {1, 1, 0, 1}, 2.0 / 3, 2.0 / 3, 2.0 / 3, 0.5},
    // perfect
    {{1, 0, 1, 0, 0}, {1, 0, 1, 0, 0}, 1.0, 1.0, 1.0, 1.0},
    // never predicts positive: P = R = F1 = 0 by convention, Acc = 2/5
    {{0, 0, 0, 0, 0}, {1, 1, 0, 1, 0}, 0.0, 0.0, 0.0, 0.4},
    // tp=3 fp=0 fn=1 tn=4: P = 1, R = 3/4, F1 = 2*(3/4)/(7/4) = 6/7, Acc = 7/8
    {{1, 1, 1, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 0, 0, 0, 0}, 1.0, 0.75, 6.0 / 7, 0.875},
    // tp=0 fp=2 fn=0 tn=2: P = 0, R = 0 (no positives), F1 = 0, Acc = 1/2
    {{1, 1, 0, 0}, {0, 0, 0, 0}, 0.0, 0.0, 0.0, 0.5},
};

}  // namespace oracles
