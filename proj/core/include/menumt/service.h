#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "menumt/menudb.h"
#include "menumt/pipeline.h"

namespace menumt {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds any free port
  std::string bundle_dir;
  std::string store_path = ":memory:";
  std::string dialog_templates;  // JSON file, optional
  std::string lexicon;           // TSV file, optional
  std::size_t k = 5;
  // Exact origins allowed to read responses cross-origin; "*" allows any.
  std::vector<std::string> cors_allowlist;
  LoadMode mode = LoadMode::kOnDemand;
};

struct Request {
  std::string method = "GET";
  std::string path;  // percent-encoded, without the query string
  std::map<std::string, std::string> query;    // decoded
  std::map<std::string, std::string> headers;  // lowercase names
  std::string body;

  // Splits "/a%20b?x=1" into path and decoded query parameters.
  static Request make(std::string method, std::string_view target, std::string body = {});
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

std::string percent_decode(std::string_view s, bool plus_as_space = false);

// Routes:
//   GET  /health
//   POST /translate                  {text, k?} -> {kbest, oov}
//   GET  /dishes/{name}
//   GET  /dishes/{name}/flags?profile=ID
//   GET  /dishes/{name}/dialog?profile=ID
//   GET  /ingredients/{name}
//   POST /profiles                   {conditions?, ingredients?}
//   GET  /images/{id}
// Missing artifacts or store give 503 on the routes that need them.
class Service {
 public:
  struct Options {
    std::size_t k = 5;
    std::vector<std::string> cors_allowlist;
    std::vector<DialogTemplateDef> templates;
    LanguagePair languages;
  };

  Service(std::shared_ptr<const Artifacts> artifacts, std::shared_ptr<Store> store,
          Options options);

  Response handle(const Request &request) const;

  const Options &options() const { return options_; }

 private:
  Response route(const Request &request) const;
  Response translate(const Request &request) const;
  Response dish(const std::string &name) const;
  Response dish_flags(const std::string &name, const Request &request) const;
  Response dish_dialog(const std::string &name, const Request &request) const;
  Response ingredient(const std::string &name) const;
  Response create_profile(const Request &request) const;
  Response image(const std::string &id) const;
  DietProfile profile_param(const Request &request) const;

  std::shared_ptr<const Artifacts> artifacts_;
  std::shared_ptr<Store> store_;
  Options options_;
};

// Loads the bundle (hash-checked), opens the store and reads the dialog
// files named in `config`.
std::unique_ptr<Service> make_service(const ServiceConfig &config);

// cpp-httplib front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(const Service &service);
  ~HttpServer();
  HttpServer(const HttpServer &) = delete;
  HttpServer &operator=(const HttpServer &) = delete;

  // Returns the bound port. Throws Error if binding fails.
  int bind(const std::string &host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace menumt
