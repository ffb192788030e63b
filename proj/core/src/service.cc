#include "menumt/service.h"

#include <httplib.h>

#include <algorithm>
#include <charconv>

#include "menumt/error.h"
#include "menumt/io.h"
#include "menumt/text.h"

namespace menumt {

namespace {

Response json_response(int status, const nlohmann::json &body) {
  Response r;
  r.status = status;
  r.body = body.dump();
  return r;
}

Response error_response(int status, const std::string &message) {
  return json_response(status, {{"error", message}});
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<std::string> path_segments(std::string_view path) {
  std::vector<std::string> out;
  for (auto seg : text::split(path, '/')) {
    if (!seg.empty()) out.push_back(percent_decode(seg));
  }
  return out;
}

std::optional<std::int64_t> parse_id(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v <= 0) return std::nullopt;
  return v;
}

// Distinguishes "bad request" from the other library errors.
class BadRequest : public Error {
 public:
  using Error::Error;
};

nlohmann::json parse_body(const Request &request) {
  try {
    return nlohmann::json::parse(request.body);
  } catch (const nlohmann::json::parse_error &) {
    throw BadRequest("request body is not valid JSON");
  }
}

std::vector<std::string> string_list(const nlohmann::json &body, const char *key) {
  if (!body.contains(key)) return {};
  const auto &v = body.at(key);
  if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const auto &e) { return e.is_string(); })) {
    throw BadRequest(std::string("\"") + key + "\" must be an array of strings");
  }
  return v.get<std::vector<std::string>>();
}

}  // namespace

std::string percent_decode(std::string_view s, bool plus_as_space) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 &&
        hex_value(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      i += 2;
    } else if (plus_as_space && s[i] == '+') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

Request Request::make(std::string method, std::string_view target, std::string body) {
  Request r;
  r.method = std::move(method);
  r.body = std::move(body);
  const auto q = target.find('?');
  r.path = std::string(target.substr(0, q));
  if (q != std::string_view::npos) {
    for (auto part : text::split(target.substr(q + 1), '&')) {
      if (part.empty()) continue;
      const auto eq = part.find('=');
      const std::string key = percent_decode(part.substr(0, eq), true);
      r.query[key] = eq == std::string_view::npos ? "" : percent_decode(part.substr(eq + 1), true);
    }
  }
  return r;
}

Service::Service(std::shared_ptr<const Artifacts> artifacts, std::shared_ptr<Store> store,
                 Options options)
    : artifacts_(std::move(artifacts)), store_(std::move(store)), options_(std::move(options)) {}

Response Service::handle(const Request &request) const {
  Response response;
  if (request.method == "OPTIONS") {
    response.status = 204;
    response.content_type.clear();
    response.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
    response.headers["Access-Control-Allow-Headers"] = "Content-Type";
  } else {
    try {
      response = route(request);
    } catch (const BadRequest &e) {
      response = error_response(400, e.what());
    } catch (const NotFound &e) {
      response = error_response(404, e.what());
    } catch (const DataError &e) {
      response = error_response(400, e.what());
    } catch (const ParseError &e) {
      response = error_response(400, e.what());
    } catch (const std::exception &e) {
      response = error_response(500, e.what());
    }
  }

  const auto origin = request.headers.find("origin");
  if (origin != request.headers.end()) {
    const auto &allow = options_.cors_allowlist;
    const bool any = std::find(allow.begin(), allow.end(), "*") != allow.end();
    if (any || std::find(allow.begin(), allow.end(), origin->second) != allow.end()) {
      response.headers["Access-Control-Allow-Origin"] = any ? "*" : origin->second;
      response.headers["Vary"] = "Origin";
    }
  }
  return response;
}

Response Service::route(const Request &request) const {
  const auto seg = path_segments(request.path);
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";
  auto method_not_allowed = [] { return error_response(405, "method not allowed"); };

  if (seg.size() == 1 && seg[0] == "health") {
    if (!get) return method_not_allowed();
    return json_response(200, {{"status", "ok"},
                               {"artifacts", artifacts_ != nullptr},
                               {"store", store_ != nullptr}});
  }
  if (seg.size() == 1 && seg[0] == "translate") {
    if (!post) return method_not_allowed();
    return translate(request);
  }
  if (seg.size() == 1 && seg[0] == "profiles") {
    if (!post) return method_not_allowed();
    return create_profile(request);
  }
  if (!seg.empty() && (seg[0] == "dishes" || seg[0] == "ingredients" || seg[0] == "images")) {
    if (!get) return method_not_allowed();
    if (seg[0] == "dishes" && seg.size() == 2) return dish(seg[1]);
    if (seg[0] == "dishes" && seg.size() == 3 && seg[2] == "flags") return dish_flags(seg[1], request);
    if (seg[0] == "dishes" && seg.size() == 3 && seg[2] == "dialog") {
      return dish_dialog(seg[1], request);
    }
    if (seg[0] == "ingredients" && seg.size() == 2) return ingredient(seg[1]);
    if (seg[0] == "images" && seg.size() == 2) return image(seg[1]);
  }
  return error_response(404, "no route for " + request.path);
}

Response Service::translate(const Request &request) const {
  if (!artifacts_) return error_response(503, "translation artifacts are not loaded");
  const auto body = parse_body(request);
  if (!body.is_object() || !body.contains("text") || !body.at("text").is_string()) {
    throw BadRequest("\"text\" must be a string");
  }
  const auto input = body.at("text").get<std::string>();
  std::size_t k = options_.k;
  if (body.contains("k")) {
    const auto &kv = body.at("k");
    if (!kv.is_number_integer() || kv.get<long long>() < 1 || kv.get<long long>() > 100) {
      throw BadRequest("\"k\" must be an integer in [1, 100]");
    }
    k = kv.get<std::size_t>();
  }
  if (tokenize(input, JoinerPolicy::kAllowJoined).empty()) throw BadRequest("\"text\" is empty");
  const KBestList kbest = artifacts_->translate(input, k);
  return json_response(200, {{"kbest", kbest.to_json()}, {"oov", kbest.oov}});
}

Response Service::dish(const std::string &name) const {
  if (!store_) return error_response(503, "menu store is not loaded");
  return json_response(200, lookup_dish(*store_, name).to_json());
}

DietProfile Service::profile_param(const Request &request) const {
  const auto it = request.query.find("profile");
  if (it == request.query.end()) throw BadRequest("missing profile parameter");
  const auto id = parse_id(it->second);
  if (!id) throw BadRequest("invalid profile id \"" + it->second + "\"");
  auto p = store_->profile(*id);
  if (!p) throw BadRequest("unknown profile " + it->second);
  return *std::move(p);
}

Response Service::dish_flags(const std::string &name, const Request &request) const {
  if (!store_) return error_response(503, "menu store is not loaded");
  const Dish d = lookup_dish(*store_, name);
  const DietProfile p = profile_param(request);
  nlohmann::json flagged = nlohmann::json::array();
  for (const auto &f : flag_dish(*store_, d, p)) flagged.push_back(f.to_json());
  return json_response(200, {{"dish", d.name}, {"profile", p.id}, {"flagged", flagged}});
}

Response Service::dish_dialog(const std::string &name, const Request &request) const {
  if (!store_) return error_response(503, "menu store is not loaded");
  const Dish d = lookup_dish(*store_, name);
  const DietProfile p = profile_param(request);
  if (options_.templates.empty()) return error_response(503, "dialog templates are not loaded");
  nlohmann::json questions = nlohmann::json::array();
  for (const auto &q :
       dialog_templates(d, flag_dish(*store_, d, p), options_.templates, options_.languages)) {
    questions.push_back(q.to_json());
  }
  return json_response(200, {{"dish", d.name},
                             {"profile", p.id},
                             {"source_lang", options_.languages.source_lang},
                             {"target_lang", options_.languages.target_lang},
                             {"questions", questions}});
}

Response Service::ingredient(const std::string &name) const {
  if (!store_) return error_response(503, "menu store is not loaded");
  return json_response(200, lookup_ingredient(*store_, name).to_json());
}

Response Service::create_profile(const Request &request) const {
  if (!store_) return error_response(503, "menu store is not loaded");
  const auto body = parse_body(request);
  if (!body.is_object()) throw BadRequest("profile must be a JSON object");
  const auto conditions = string_list(body, "conditions");
  const auto ingredients = string_list(body, "ingredients");
  return json_response(201, store_->create_profile(conditions, ingredients).to_json());
}

Response Service::image(const std::string &id_text) const {
  if (!store_) return error_response(503, "menu store is not loaded");
  const auto id = parse_id(id_text);
  if (!id) throw NotFound("unknown image " + id_text);
  const auto img = store_->image(*id);
  if (!img) throw NotFound("unknown image " + id_text);
  Response r;
  r.content_type = img->content_type();
  r.body = img->bytes;
  r.headers["Cache-Control"] = "public, max-age=86400, immutable";
  r.headers["ETag"] = "\"" + io::sha256_hex(img->bytes).substr(0, 32) + "\"";
  return r;
}

std::unique_ptr<Service> make_service(const ServiceConfig &config) {
  std::shared_ptr<const Artifacts> artifacts;
  if (!config.bundle_dir.empty()) {
    artifacts = Artifacts::load(config.bundle_dir, {config.mode, true});
  }
  auto store = std::make_shared<Store>(config.store_path);
  Service::Options options;
  options.k = config.k;
  options.cors_allowlist = config.cors_allowlist;
  if (!config.dialog_templates.empty()) {
    options.templates = parse_dialog_templates(io::read_file(config.dialog_templates));
  }
  if (!config.lexicon.empty()) options.languages.lexicon = parse_lexicon(io::read_file(config.lexicon));
  return std::make_unique<Service>(std::move(artifacts), std::move(store), std::move(options));
}

struct HttpServer::Impl {
  const Service &service;
  httplib::Server server;
};

HttpServer::HttpServer(const Service &service) : impl_(new Impl{service, {}}) {
  auto handler = [this](const httplib::Request &req, httplib::Response &res) {
    const std::string &target = req.target.empty() ? req.path : req.target;
    Request r = Request::make(req.method, target, req.body);
    for (const auto &[name, value] : req.headers) r.headers[text::to_lower(name)] = value;
    const Response out = impl_->service.handle(r);
    res.status = out.status;
    for (const auto &[name, value] : out.headers) res.set_header(name, value);
    if (!out.content_type.empty()) res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Options(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string &host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace menumt
