#include "doccheck/serve.hpp"

#include "doccheck/error.hpp"
#include "doccheck/rng.hpp"

#include "httplib.h"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>

namespace doccheck::serve {
namespace {

using nlohmann::ordered_json;

Reply error_reply(int status, std::string_view kind, std::string_view message) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  return {status, j.dump()};
}

// 500s carry only an id; the details go to the server log under that id.
Reply internal_error(std::string_view what) {
  static std::atomic<std::uint64_t> counter{0};
  const auto now = static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count());
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(derive_seed(now, counter++)));
  std::cerr << R"({"error":"internal","id":")" << id << R"(","message":)" << ordered_json(what).dump() << "}\n";
  ordered_json j;
  j["error"] = "internal";
  j["id"] = id;
  return {500, j.dump()};
}

std::optional<double> parse_threshold(std::string_view s) {
  try {
    std::size_t used = 0;
    const double t = std::stod(std::string(s), &used);
    if (used != s.size()) return std::nullopt;
    return t;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

Service::Service(model::Checkpoint model, detect::CheckOptions defaults)
    : model_(std::move(model)), defaults_(defaults), version_(model_.version()) {}

Reply Service::check(const std::string& code, std::string_view language, std::optional<double> threshold) const {
  if (code.size() > kMaxCodeBytes) return error_reply(413, "payload_too_large", "code exceeds 1 MiB");
  const auto lang = parse_language(language);
  if (!lang) return error_reply(422, "unknown_language", "unsupported language: " + std::string(language));
  detect::CheckOptions opts = defaults_;
  if (threshold) {
    if (!(*threshold > 0.0 && *threshold < 1.0)) return error_reply(400, "bad_request", "threshold must lie in (0, 1)");
    opts.threshold = *threshold;
  }
  try {
    const detect::CheckReport report = detect::check_source(code, *lang, model_, opts);
    ordered_json j = detect::report_json(report, version_);
    // Additive for the review UI: the splice that applies each recommendation.
    ordered_json edits = ordered_json::array();
    for (const auto& e : report.edits) edits.push_back(e ? extract::to_json(*e) : ordered_json(nullptr));
    j["edits"] = std::move(edits);
    return {200, j.dump(-1, ' ', false, ordered_json::error_handler_t::replace)};
  } catch (const std::exception& e) {
    return internal_error(e.what());
  }
}

Reply Service::check_json(std::string_view body) const {
  const nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error_reply(400, "bad_request", "body must be a JSON object");
  if (j.contains("file")) return error_reply(400, "bad_request", "file uploads use multipart/form-data");
  if (!j.contains("code") || !j["code"].is_string()) return error_reply(400, "bad_request", "code must be a string");
  if (!j.contains("language") || !j["language"].is_string()) {
    return error_reply(400, "bad_request", "language must be a string");
  }
  std::optional<double> threshold;
  if (j.contains("threshold") && !j["threshold"].is_null()) {
    if (!j["threshold"].is_number()) return error_reply(400, "bad_request", "threshold must be a number");
    threshold = j["threshold"].get<double>();
  }
  return check(j["code"].get<std::string>(), j["language"].get<std::string>(), threshold);
}

Reply Service::check_form(const Form& form) const {
  if (form.code.has_value() == form.file.has_value()) {
    return error_reply(400, "bad_request", "give exactly one of code or file");
  }
  std::string language;
  if (form.language) {
    language = *form.language;
  } else if (form.file && form.filename) {
    const auto lang = language_for_path(*form.filename);
    if (!lang) return error_reply(422, "unknown_language", "cannot infer language from " + *form.filename);
    language = to_string(*lang);
  } else {
    return error_reply(400, "bad_request", "language is required");
  }
  std::optional<double> threshold;
  if (form.threshold) {
    threshold = parse_threshold(*form.threshold);
    if (!threshold) return error_reply(400, "bad_request", "threshold must be a number");
  }
  return check(form.code ? *form.code : *form.file, language, threshold);
}

Reply Service::languages() const {
  ordered_json out = ordered_json::array();
  for (LanguageId lang : kAllLanguages) {
    ordered_json j;
    j["id"] = to_string(lang);
    j["supported"] = fully_supported(lang) ? "full" : "staged";
    out.push_back(std::move(j));
  }
  return {200, out.dump()};
}

Reply Service::health() const {
  ordered_json j;
  j["status"] = "ok";
  j["model_version"] = version_;
  return {200, j.dump()};
}

Server::Server(const Service& service) : http_(std::make_unique<httplib::Server>()) {
  httplib::Server& s = *http_;
  // Form overhead on top of the code limit; beyond this httplib answers 413.
  s.set_payload_max_length(kMaxCodeBytes + (std::size_t{64} << 10));
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };

  s.Post("/api/check", [&service, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) return send(res, service.check_json(req.body));
    Service::Form form;
    auto field = [&](const char* key) -> std::optional<std::string> {
      if (!req.has_file(key)) return std::nullopt;
      return req.get_file_value(key).content;
    };
    form.code = field("code");
    form.file = field("file");
    if (req.has_file("file") && !req.get_file_value("file").filename.empty()) {
      form.filename = req.get_file_value("file").filename;
    }
    form.language = field("language");
    form.threshold = field("threshold");
    send(res, service.check_form(form));
  });
  s.Get("/api/languages", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.languages());
  });
  s.Get("/healthz", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send(res, internal_error(e.what()));
    } catch (...) {
      send(res, internal_error("unknown exception"));
    }
  });
  s.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413) return send(res, error_reply(413, "payload_too_large", "request body too large"));
    if (res.status == 404) return send(res, error_reply(404, "not_found", "no such endpoint"));
    if (res.status == 400) return send(res, error_reply(400, "bad_request", "malformed request"));
  });
}

Server::~Server() = default;

int Server::bind(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Server::listen() { http_->listen_after_bind(); }

void Server::stop() { http_->stop(); }

}  // namespace doccheck::serve
