#pragma once

#include "doccheck/detect.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace doccheck::serve {

inline constexpr std::size_t kMaxCodeBytes = std::size_t{1} << 20;

struct Reply {
  int status = 200;
  std::string body;  // always JSON
};

// Request handling, independent of the transport. The checkpoint is loaded
// once and only read afterwards, so one Service may answer many threads.
class Service {
public:
  explicit Service(model::Checkpoint model, detect::CheckOptions defaults = {});

  // {"code": "...", "language": "python", "threshold": 0.5?}
  Reply check_json(std::string_view body) const;

  // Multipart form: exactly one of a `code` field or a `file` upload, plus
  // `language` (inferred from the upload's filename when absent) and an
  // optional `threshold`.
  struct Form {
    std::optional<std::string> code;
    std::optional<std::string> file;
    std::optional<std::string> filename;
    std::optional<std::string> language;
    std::optional<std::string> threshold;
  };
  Reply check_form(const Form& form) const;

  Reply languages() const;
  Reply health() const;

  const std::string& model_version() const { return version_; }

private:
  Reply check(const std::string& code, std::string_view language, std::optional<double> threshold) const;

  model::Checkpoint model_;
  detect::CheckOptions defaults_;
  std::string version_;
};

// The HTTP front: POST /api/check, GET /api/languages, GET /healthz, CORS.
class Server {
public:
  explicit Server(const Service& service);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws Io on failure.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

private:
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace doccheck::serve
