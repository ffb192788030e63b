#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "bundles.h"
#include "menumt/io.h"
#include "menumt/service.h"
#include "schema_check.h"

namespace menumt {
namespace {

using testing::TempDir;

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sample_dir_ = new TempDir("svc-sample");
    cortado_dir_ = new TempDir("svc-cortado");
    testing::build_sample(sample_dir_->path().string());
    testing::build_cortado(cortado_dir_->path().string());
  }
  static void TearDownTestSuite() {
    delete sample_dir_;
    delete cortado_dir_;
  }

  void SetUp() override {
    store_ = std::make_shared<Store>();
    store_->import(parse_dsl(io::read_file(testing::data_path("menu.dsl"))),
                   directory_image_loader(testing::data_path("images")));
    store_->import_conditions(io::read_file(testing::data_path("conditions.tsv")));
    service_ = make(Artifacts::load(sample_dir_->path().string()));
  }

  std::unique_ptr<Service> make(std::shared_ptr<const Artifacts> artifacts,
                                std::vector<std::string> cors = {"http://localhost:5173"}) {
    Service::Options opt;
    opt.cors_allowlist = std::move(cors);
    opt.templates =
        parse_dialog_templates(io::read_file(testing::data_path("dialog_templates.json")));
    opt.languages.lexicon = parse_lexicon(io::read_file(testing::data_path("lexicon.tsv")));
    return std::make_unique<Service>(std::move(artifacts), store_, std::move(opt));
  }

  Response call(const std::string &method, const std::string &target, const std::string &body = {}) {
    return service_->handle(Request::make(method, target, body));
  }

  // Asserts the response matches the documented schema for its status.
  void conforms(const std::string &route, const Response &r) {
    const auto &schema = checker().response(route, r.status);
    if (schema.value("binary", false)) return;
    const auto errors = checker().check(schema, r.json());
    EXPECT_TRUE(errors.empty()) << route << " " << r.status << ": " << errors.front();
  }

  std::int64_t profile(const nlohmann::json &body) {
    const auto r = call("POST", "/profiles", body.dump());
    EXPECT_EQ(r.status, 201);
    return r.json().at("id").get<std::int64_t>();
  }

  static const testing::SchemaChecker &checker() {
    static const testing::SchemaChecker c(
        nlohmann::json::parse(io::read_file(testing::docs_path("api-schema.json"))));
    return c;
  }

  static TempDir *sample_dir_;
  static TempDir *cortado_dir_;
  std::shared_ptr<Store> store_;
  std::unique_ptr<Service> service_;
};

TempDir *ServiceTest::sample_dir_ = nullptr;
TempDir *ServiceTest::cortado_dir_ = nullptr;

TEST(Request, SplitsTargetAndDecodesQuery) {
  const auto r = Request::make("GET", "/dishes/bread%20with%20tomato/flags?profile=3&x=a+b%21");
  EXPECT_EQ(r.path, "/dishes/bread%20with%20tomato/flags");
  EXPECT_EQ(r.query.at("profile"), "3");
  EXPECT_EQ(r.query.at("x"), "a b!");
  EXPECT_EQ(percent_decode("caf%C3%A9"), "café");
  EXPECT_EQ(percent_decode("100%"), "100%");
  EXPECT_EQ(percent_decode("a+b"), "a+b");
}

TEST_F(ServiceTest, Health) {
  const auto r = call("GET", "/health");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.json().at("status"), "ok");
  conforms("GET /health", r);
  EXPECT_EQ(call("POST", "/health").status, 405);
}

TEST_F(ServiceTest, TranslateReturnsKBest) {
  const auto r = call("POST", "/translate", R"({"text":"arroz a la cubana","k":3})");
  ASSERT_EQ(r.status, 200);
  conforms("POST /translate", r);
  const auto j = r.json();
  EXPECT_EQ(j.at("kbest").at(0).at("text"), "rice cuban style");
  EXPECT_EQ(j.at("kbest").at(0).at("rank"), 1);
  EXPECT_LE(j.at("kbest").size(), 3u);
  EXPECT_TRUE(j.at("oov").empty());
  // Same answer as the library call.
  EXPECT_EQ(j.at("kbest"),
            Artifacts::load(sample_dir_->path().string())->translate("arroz a la cubana", 3).to_json());
}

TEST_F(ServiceTest, TranslateReportsOov) {
  const auto r = call("POST", "/translate", R"({"text":"xyzzy"})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.json().at("oov"), nlohmann::json::array({"xyzzy"}));
  EXPECT_EQ(r.json().at("kbest").size(), 1u);
}

TEST_F(ServiceTest, TranslateRejectsBadRequests) {
  for (const auto *body : {"", "not json", "[]", R"({"txt":"a"})", R"({"text":5})", R"({"text":""})",
                           R"({"text":"  ¡! "})", R"({"text":"pan","k":0})", R"({"text":"pan","k":101})",
                           R"({"text":"pan","k":"3"})"}) {
    const auto r = call("POST", "/translate", body);
    EXPECT_EQ(r.status, 400) << body;
    conforms("POST /translate", r);
  }
  EXPECT_EQ(call("GET", "/translate").status, 405);
}

TEST_F(ServiceTest, TranslateWithoutArtifactsIs503) {
  service_ = make(nullptr);
  const auto r = call("POST", "/translate", R"({"text":"pan"})");
  EXPECT_EQ(r.status, 503);
  conforms("POST /translate", r);
  EXPECT_EQ(call("GET", "/health").json().at("artifacts"), false);
  EXPECT_EQ(call("GET", "/dishes/gazpacho").status, 200);
}

TEST_F(ServiceTest, CortadoOverHttpRouter) {
  service_ = make(Artifacts::load(cortado_dir_->path().string()));
  EXPECT_EQ(call("POST", "/translate", R"({"text":"café cortado"})").json()["kbest"][0]["text"],
            "espresso with milk");
  EXPECT_EQ(call("POST", "/translate", R"({"text":"yogurt cortado"})").json()["kbest"][0]["text"],
            "sour yogurt");
}

TEST_F(ServiceTest, DishLookupWithEncodedName) {
  const auto r = call("GET", "/dishes/bread%20with%20tomato");
  ASSERT_EQ(r.status, 200);
  conforms("GET /dishes/{name}", r);
  const auto j = r.json();
  EXPECT_EQ(j.at("name"), "bread with tomato");
  EXPECT_EQ(j.at("ingredients").size(), 6u);
  EXPECT_EQ(j, lookup_dish(*store_, "bread with tomato").to_json());
  const auto missing = call("GET", "/dishes/paella");
  EXPECT_EQ(missing.status, 404);
  conforms("GET /dishes/{name}", missing);
}

TEST_F(ServiceTest, IngredientLookup) {
  const auto r = call("GET", "/ingredients/tomato");
  ASSERT_EQ(r.status, 200);
  conforms("GET /ingredients/{name}", r);
  EXPECT_EQ(r.json().at("dishes"), nlohmann::json::array({"bread with tomato", "gazpacho"}));
  EXPECT_EQ(call("GET", "/ingredients/saffron").status, 404);
}

TEST_F(ServiceTest, ProfilesAndFlags) {
  const auto created = call("POST", "/profiles", R"({"conditions":["garlic intolerance"],"ingredients":["salt"]})");
  ASSERT_EQ(created.status, 201);
  conforms("POST /profiles", created);
  const auto id = created.json().at("id").get<std::int64_t>();
  EXPECT_EQ(created.json().at("flagged_ingredients"), nlohmann::json::array({"garlic", "salt"}));

  const auto r = call("GET", "/dishes/bread%20with%20tomato/flags?profile=" + std::to_string(id));
  ASSERT_EQ(r.status, 200);
  conforms("GET /dishes/{name}/flags", r);
  nlohmann::json want = nlohmann::json::array();
  for (const auto &f : flag_dish(*store_, lookup_dish(*store_, "bread with tomato"), *store_->profile(id))) {
    want.push_back(f.to_json());
  }
  EXPECT_EQ(r.json().at("flagged"), want);
  EXPECT_EQ(want.size(), 2u);
  EXPECT_EQ(want[1].at("reasons"), nlohmann::json::array({nullptr}));
}

TEST_F(ServiceTest, ProfileErrors) {
  for (const auto *body : {"nope", "[]", R"({"conditions":"x"})", R"({"conditions":[1]})",
                           R"({"conditions":["unknown"]})", R"({"ingredients":["saffron"]})"}) {
    const auto r = call("POST", "/profiles", body);
    EXPECT_EQ(r.status, 400) << body;
    conforms("POST /profiles", r);
  }
  EXPECT_EQ(call("POST", "/profiles", "{}").status, 201);
  for (const auto *q : {"", "?profile=", "?profile=abc", "?profile=-1", "?profile=999"}) {
    const auto r = call("GET", std::string("/dishes/gazpacho/flags") + q);
    EXPECT_EQ(r.status, 400) << q;
    conforms("GET /dishes/{name}/flags", r);
  }
  const auto id = profile({{"conditions", {"vegetarian"}}});
  EXPECT_EQ(call("GET", "/dishes/paella/flags?profile=" + std::to_string(id)).status, 404);
}

TEST_F(ServiceTest, Dialog) {
  const auto id = profile({{"conditions", {"garlic intolerance"}}});
  const auto r = call("GET", "/dishes/bread%20with%20tomato/dialog?profile=" + std::to_string(id));
  ASSERT_EQ(r.status, 200);
  conforms("GET /dishes/{name}/dialog", r);
  const auto q = r.json().at("questions");
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].at("template"), "remove");
  EXPECT_EQ(q[0].at("source"), "¿Pueden preparar pan con tomate sin ajo?");
  EXPECT_EQ(q[1].at("answers").size(), 3u);
  EXPECT_EQ(r.json().at("source_lang"), "es");

  const auto none = call("GET", "/dishes/gazpacho/dialog?profile=" + std::to_string(profile(nlohmann::json::object())));
  EXPECT_EQ(none.json().at("questions").size(), 0u);

  Service::Options bare;
  service_ = std::make_unique<Service>(nullptr, store_, bare);
  EXPECT_EQ(call("GET", "/dishes/gazpacho/dialog?profile=" + std::to_string(id)).status, 503);
}

TEST_F(ServiceTest, Images) {
  const auto dish = lookup_dish(*store_, "bread with tomato");
  const auto r = call("GET", "/images/" + std::to_string(dish.image_id));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  EXPECT_EQ(r.body, io::read_file(testing::data_path("images/bread with tomato.png")));
  EXPECT_FALSE(r.headers.at("ETag").empty());
  EXPECT_NE(r.headers.at("Cache-Control").find("max-age"), std::string::npos);
  for (const auto *bad : {"/images/0", "/images/abc", "/images/99999"}) {
    const auto e = call("GET", bad);
    EXPECT_EQ(e.status, 404) << bad;
    conforms("GET /images/{id}", e);
  }
}

TEST_F(ServiceTest, UnknownRoutesAndMethods) {
  EXPECT_EQ(call("GET", "/").status, 404);
  EXPECT_EQ(call("GET", "/dishes").status, 404);
  EXPECT_EQ(call("GET", "/dishes/gazpacho/extra/more").status, 404);
  EXPECT_EQ(call("POST", "/dishes/gazpacho").status, 405);
  EXPECT_EQ(call("DELETE", "/images/1").status, 405);
}

TEST_F(ServiceTest, Cors) {
  auto req = Request::make("GET", "/health");
  req.headers["origin"] = "http://localhost:5173";
  auto r = service_->handle(req);
  EXPECT_EQ(r.headers.at("Access-Control-Allow-Origin"), "http://localhost:5173");
  req.headers["origin"] = "http://evil.example";
  r = service_->handle(req);
  EXPECT_FALSE(r.headers.count("Access-Control-Allow-Origin"));

  auto pre = Request::make("OPTIONS", "/translate");
  pre.headers["origin"] = "http://localhost:5173";
  r = service_->handle(pre);
  EXPECT_EQ(r.status, 204);
  EXPECT_TRUE(r.headers.count("Access-Control-Allow-Methods"));

  service_ = make(nullptr, {"*"});
  req.headers["origin"] = "http://anything";
  EXPECT_EQ(service_->handle(req).headers.at("Access-Control-Allow-Origin"), "*");
}

TEST_F(ServiceTest, StatelessAcrossRequests) {
  const auto first = call("POST", "/translate", R"({"text":"arroz a la cubana"})").body;
  call("POST", "/translate", R"({"text":"flan"})");
  call("GET", "/dishes/gazpacho");
  EXPECT_EQ(call("POST", "/translate", R"({"text":"arroz a la cubana"})").body, first);
}

TEST_F(ServiceTest, ConcurrentRequests) {
  const auto want = call("POST", "/translate", R"({"text":"pollo a la cubana"})").body;
  std::vector<std::thread> threads;
  std::atomic<int> bad{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 20; ++i) {
        if (call("POST", "/translate", R"({"text":"pollo a la cubana"})").body != want) ++bad;
        if (call("GET", "/dishes/gazpacho").status != 200) ++bad;
      }
    });
  }
  for (auto &t : threads) t.join();
  EXPECT_EQ(bad.load(), 0);
}

TEST_F(ServiceTest, SchemaCoversEveryRoute) {
  const auto &routes = checker().document().at("routes");
  for (const auto *r : {"GET /health", "POST /translate", "GET /dishes/{name}", "GET /dishes/{name}/flags",
                        "GET /dishes/{name}/dialog", "GET /ingredients/{name}", "POST /profiles",
                        "GET /images/{id}"}) {
    EXPECT_TRUE(routes.contains(r)) << r;
  }
  // The checker itself rejects a malformed body.
  EXPECT_FALSE(checker().check(checker().response("POST /translate", 200), {{"kbest", 1}}).empty());
}

TEST_F(ServiceTest, RealHttpServer) {
  HttpServer server(*service_);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  for (int i = 0; i < 50 && !client.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto tr = client.Post("/translate", R"({"text":"arroz a la cubana"})", "application/json");
  ASSERT_TRUE(tr);
  EXPECT_EQ(nlohmann::json::parse(tr->body)["kbest"][0]["text"], "rice cuban style");

  auto dish = client.Get("/dishes/bread%20with%20tomato");
  ASSERT_TRUE(dish);
  EXPECT_EQ(dish->status, 200);
  EXPECT_EQ(nlohmann::json::parse(dish->body)["name"], "bread with tomato");

  httplib::Headers origin{{"Origin", "http://localhost:5173"}};
  auto cors = client.Get("/health", origin);
  ASSERT_TRUE(cors);
  EXPECT_EQ(cors->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");

  auto img = client.Get("/images/" + std::to_string(lookup_dish(*store_, "bread with tomato").image_id));
  ASSERT_TRUE(img);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");

  auto missing = client.Get("/dishes/paella");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  loop.join();
}

TEST(MakeService, LoadsConfiguredFiles) {
  TempDir bundle, store_dir;
  testing::build_cortado(bundle.path().string());
  const auto db = (store_dir.path() / "menu.db").string();
  {
    Store s(db);
    s.import(parse_dsl(io::read_file(testing::data_path("menu.dsl"))));
  }
  ServiceConfig cfg;
  cfg.bundle_dir = bundle.path().string();
  cfg.store_path = db;
  cfg.dialog_templates = testing::data_path("dialog_templates.json");
  cfg.lexicon = testing::data_path("lexicon.tsv");
  cfg.k = 2;
  const auto svc = make_service(cfg);
  EXPECT_EQ(svc->options().k, 2u);
  EXPECT_EQ(svc->options().templates.size(), 2u);
  const auto r = svc->handle(Request::make("POST", "/translate", R"({"text":"café cortado"})"));
  EXPECT_EQ(r.json()["kbest"][0]["text"], "espresso with milk");
  EXPECT_LE(r.json()["kbest"].size(), 2u);
  EXPECT_EQ(svc->handle(Request::make("GET", "/dishes/gazpacho")).status, 200);

  cfg.bundle_dir = store_dir.path().string();
  EXPECT_THROW(make_service(cfg), Error);
}

}  // namespace
}  // namespace menumt
