#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <thread>

#include "menumt/error.h"
#include "menumt/io.h"
#include "menumt/menudb.h"
#include "test_support.h"

namespace menumt {
namespace {

constexpr const char *kBreadBlock =
    "#bread with tomato\n-bread\n=toasted bread\n-tomato\n-olive oil\n$oil\n-salt\n-+garlic\n";

const char *const kCoreRelations[] = {"images",           "ingredients", "dishes",
                                      "dish_ingredients", "dish_images", "ingredient_images"};

std::vector<DishRecord> menu() { return parse_dsl(io::read_file(testing::data_path("menu.dsl"))); }

std::unique_ptr<Store> menu_store() {
  auto s = std::make_unique<Store>();
  s->import(menu(), directory_image_loader(testing::data_path("images")));
  s->import_conditions(io::read_file(testing::data_path("conditions.tsv")));
  return s;
}

std::vector<DialogTemplateDef> templates() {
  return parse_dialog_templates(io::read_file(testing::data_path("dialog_templates.json")));
}

TEST(Dsl, BreadWithTomatoBlock) {
  const auto d = parse_dsl(kBreadBlock);
  const std::vector<DishRecord> want{{"bread with tomato",
                                      "bread with tomato",
                                      {{"bread", "bread", false, {"toasted bread"}},
                                       {"tomato", "tomato", false, {}},
                                       {"olive oil", "oil", false, {}},
                                       {"salt", "salt", false, {}},
                                       {"garlic", "garlic", true, {}}}}};
  EXPECT_EQ(d, want);
}

TEST(Dsl, DishImageAndWhitespace) {
  const auto d = parse_dsl("\n  #garlic prawns  \n$prawns\n\n- prawns\n-+ chilli\n$chilli pic\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].image, "prawns");
  EXPECT_EQ(d[0].ingredients[0].name, "prawns");
  EXPECT_TRUE(d[0].ingredients[1].optional);
  EXPECT_EQ(d[0].ingredients[1].image, "chilli pic");
}

TEST(Dsl, EmptyInput) {
  EXPECT_TRUE(parse_dsl("").empty());
  EXPECT_TRUE(parse_dsl("\n  \n").empty());
}

TEST(Dsl, SubstituteMustFollowIngredient) {
  try {
    parse_dsl("#pan\n=toasted bread\n-bread\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("'='"), std::string::npos);
  }
  EXPECT_THROW(parse_dsl("#pan\n$img\n=x\n"), ParseError);
  EXPECT_NO_THROW(parse_dsl("#pan\n-bread\n$b\n=toast\n=crackers\n"));
}

TEST(Dsl, ImagePlacementAndOtherErrors) {
  EXPECT_THROW(parse_dsl("#pan\n-bread\n=toast\n$img\n"), ParseError);
  EXPECT_THROW(parse_dsl("#pan\n$a\n$b\n"), ParseError);
  EXPECT_THROW(parse_dsl("-bread\n"), ParseError);
  EXPECT_THROW(parse_dsl("#\n-bread\n"), ParseError);
  EXPECT_THROW(parse_dsl("#pan\n-\n"), ParseError);
  EXPECT_THROW(parse_dsl("#pan\n-bread\n=\n"), ParseError);
  EXPECT_THROW(parse_dsl("#pan\n*bread\n"), ParseError);
  EXPECT_THROW(parse_dsl("#pan\n-\xff\n"), ParseError);
}

TEST(Dsl, SerializeRoundTrip) {
  const auto m = menu();
  EXPECT_EQ(parse_dsl(serialize_dsl(m)), m);
  EXPECT_EQ(serialize_dsl(parse_dsl(serialize_dsl(m))), serialize_dsl(m));
  const auto block = parse_dsl(kBreadBlock);
  EXPECT_EQ(parse_dsl(serialize_dsl(block)), block);
}

TEST(Store, BreadBlockRelations) {
  Store s;
  s.import(parse_dsl(kBreadBlock));
  const auto sizes = s.relation_sizes();
  EXPECT_EQ(sizes.at("dishes"), 1u);
  EXPECT_EQ(sizes.at("ingredients"), 6u);
  EXPECT_GE(sizes.at("images"), 2u);
  EXPECT_EQ(sizes.at("dish_ingredients"), 6u);
  EXPECT_EQ(sizes.at("dish_images"), 1u);
  EXPECT_EQ(sizes.at("ingredient_images"), 6u);

  const Dish d = lookup_dish(s, "bread with tomato");
  ASSERT_EQ(d.ingredients.size(), 6u);
  EXPECT_EQ(d.image, "bread with tomato");
  std::map<std::string, IngredientUse> by_name;
  for (const auto &u : d.ingredients) by_name[u.name] = u;
  EXPECT_TRUE(by_name.at("garlic").optional);
  EXPECT_FALSE(by_name.at("salt").optional);
  EXPECT_EQ(by_name.at("toasted bread").substitute_for, std::optional<std::string>("bread"));
  EXPECT_EQ(by_name.at("bread").substitutes, std::vector<std::string>{"toasted bread"});
  EXPECT_EQ(by_name.at("olive oil").image, "oil");
  EXPECT_EQ(d.ingredients[0].name, "bread");
  EXPECT_EQ(d.ingredients[1].name, "toasted bread");
}

TEST(Store, EmptyImportLeavesRelationsEmpty) {
  Store s;
  s.import({});
  const auto sizes = s.relation_sizes();
  for (const auto *rel : kCoreRelations) EXPECT_EQ(sizes.at(rel), 0u) << rel;
}

TEST(Store, SharedIngredientIsOneRecord) {
  Store s;
  s.import(parse_dsl("#gazpacho\n-tomato\n-cucumber\n#bread with tomato\n-bread\n-tomato\n"));
  EXPECT_EQ(s.relation_sizes().at("ingredients"), 3u);
  EXPECT_EQ(s.relation_sizes().at("dish_ingredients"), 4u);
  const auto tomato = lookup_ingredient(s, "tomato");
  EXPECT_EQ(tomato.dishes, (std::vector<std::string>{"bread with tomato", "gazpacho"}));
}

TEST(Store, NavigationIsSymmetric) {
  const auto s = menu_store();
  std::set<std::pair<std::string, std::string>> from_dishes, from_ingredients;
  for (const auto &d : s->dish_names())
    for (const auto &u : lookup_dish(*s, d).ingredients) from_dishes.emplace(d, u.name);
  for (const auto &i : s->ingredient_names())
    for (const auto &d : lookup_ingredient(*s, i).dishes) from_ingredients.emplace(d, i);
  EXPECT_EQ(from_dishes, from_ingredients);
  EXPECT_FALSE(from_dishes.empty());
}

TEST(Store, ImportIsIdempotent) {
  Store a, b;
  a.import(menu());
  b.import(menu());
  b.import(menu());
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Store, ReimportReplacesDishRelations) {
  Store s;
  s.import(parse_dsl("#toast\n-bread\n-butter\n"));
  s.import(parse_dsl("#toast\n-bread\n-+jam\n"));
  const auto d = lookup_dish(s, "toast");
  ASSERT_EQ(d.ingredients.size(), 2u);
  EXPECT_EQ(d.ingredients[1].name, "jam");
  EXPECT_TRUE(lookup_ingredient(s, "butter").dishes.empty());
}

TEST(Store, ImagesFromDirectory) {
  const auto s = menu_store();
  const auto d = lookup_dish(*s, "bread with tomato");
  const auto img = s->image(d.image_id);
  ASSERT_TRUE(img);
  EXPECT_EQ(img->content_type(), "image/png");
  EXPECT_EQ(img->bytes, io::read_file(testing::data_path("images/bread with tomato.png")));
  const auto bread = lookup_ingredient(*s, "bread");
  ASSERT_FALSE(bread.images.empty());
  EXPECT_EQ(s->image(bread.images[0].first)->content_type(), "image/jpeg");
  const auto salt = lookup_ingredient(*s, "salt");
  const auto placeholder = s->image(salt.images.at(0).first);
  EXPECT_TRUE(placeholder->bytes.empty());
  EXPECT_EQ(placeholder->content_type(), "application/octet-stream");
  EXPECT_FALSE(s->image(99999));
}

TEST(Store, UnknownNamesAreNotFound) {
  const auto s = menu_store();
  EXPECT_FALSE(s->find_dish("paella"));
  EXPECT_THROW(lookup_dish(*s, "paella"), NotFound);
  EXPECT_THROW(lookup_ingredient(*s, "saffron"), NotFound);
}

TEST(Store, ConditionImportValidatesIngredients) {
  Store s;
  s.import(parse_dsl(kBreadBlock));
  try {
    s.import_conditions("garlic intolerance\tgarlic\nvegan\thoney\n");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(s.import_conditions("just one column\n"), ParseError);
}

TEST(Flags, ConditionDerivedFlag) {
  const auto s = menu_store();
  const auto p = set_profile(*s, {"garlic intolerance"}, {});
  EXPECT_EQ(p.flagged_ingredients, std::vector<std::string>{"garlic"});
  const auto f = flag_dish(*s, lookup_dish(*s, "bread with tomato"), p);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].name, "garlic");
  EXPECT_TRUE(f[0].optional);
  EXPECT_EQ(f[0].reasons, (std::vector<std::optional<std::string>>{"garlic intolerance"}));
}

TEST(Flags, EmptyProfileFlagsNothing) {
  const auto s = menu_store();
  const auto p = set_profile(*s, {}, {});
  for (const auto &d : s->dish_names()) EXPECT_TRUE(flag_dish(*s, lookup_dish(*s, d), p).empty());
}

TEST(Flags, UserAddedIngredientBehavesLikeConditionFlag) {
  const auto s = menu_store();
  const auto by_condition = set_profile(*s, {"garlic intolerance"}, {});
  const auto by_user = set_profile(*s, {}, {"garlic"});
  EXPECT_EQ(s->flags(by_user.id).at("garlic"), (std::vector<std::optional<std::string>>{std::nullopt}));
  for (const auto &d : s->dish_names()) {
    const auto dish = lookup_dish(*s, d);
    const auto a = flag_dish(*s, dish, by_condition);
    const auto b = flag_dish(*s, dish, by_user);
    ASSERT_EQ(a.size(), b.size()) << d;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].name, b[i].name);
      EXPECT_EQ(a[i].optional, b[i].optional);
    }
  }
}

TEST(Flags, SubstitutesAndOrdering) {
  const auto s = menu_store();
  const auto p = set_profile(*s, {"gluten intolerance", "lactose intolerance"}, {"ham"});
  const auto f = flag_dish(*s, lookup_dish(*s, "ham and cheese sandwich"), p);
  std::vector<std::string> names;
  for (const auto &x : f) names.push_back(x.name);
  EXPECT_EQ(names, (std::vector<std::string>{"bread", "butter", "cheese", "ham", "toasted bread"}));
  for (const auto &x : f)
    if (x.name == "toasted bread") EXPECT_EQ(x.substitute_for, std::optional<std::string>("bread"));
  const auto json = p.to_json();
  EXPECT_EQ(json["conditions"].size(), 2u);
}

TEST(Flags, SubsetProperty) {
  const auto s = menu_store();
  std::mt19937 rng(6);
  const auto conditions = s->condition_names();
  const auto ingredients = s->ingredient_names();
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> cs, is;
    for (const auto &c : conditions)
      if (rng() % 3 == 0) cs.push_back(c);
    for (const auto &i : ingredients)
      if (rng() % 8 == 0) is.push_back(i);
    const auto p = set_profile(*s, cs, is);
    const std::set<std::string> flagged(p.flagged_ingredients.begin(), p.flagged_ingredients.end());
    for (const auto &d : s->dish_names()) {
      const auto dish = lookup_dish(*s, d);
      std::set<std::string> in_dish;
      for (const auto &u : dish.ingredients) in_dish.insert(u.name);
      std::vector<std::string> want;
      std::set_intersection(in_dish.begin(), in_dish.end(), flagged.begin(), flagged.end(),
                            std::back_inserter(want));
      std::vector<std::string> got;
      for (const auto &f : flag_dish(*s, dish, p)) got.push_back(f.name);
      EXPECT_EQ(got, want);
    }
  }
}

TEST(Flags, UnknownNamesRejectedAndProfilesPersist) {
  const auto s = menu_store();
  EXPECT_THROW(set_profile(*s, {"no such condition"}, {}), DataError);
  EXPECT_THROW(set_profile(*s, {}, {"saffron"}), DataError);
  const auto p = set_profile(*s, {"vegetarian"}, {"onion"});
  const auto again = s->profile(p.id);
  ASSERT_TRUE(again);
  EXPECT_EQ(again->flagged_ingredients, p.flagged_ingredients);
  EXPECT_FALSE(s->profile(p.id + 100));
  EXPECT_TRUE(s->flags(p.id + 100).empty());
}

TEST(Store, FileBackedStoreReopens) {
  testing::TempDir dir;
  const auto path = (dir.path() / "menu.db").string();
  nlohmann::json before;
  {
    Store s(path);
    s.import(menu());
    before = s.dump();
  }
  Store reopened(path);
  EXPECT_EQ(reopened.dump(), before);
}

TEST(Store, ConcurrentReadersDuringImport) {
  Store s;
  s.import(menu());
  std::vector<std::thread> readers;
  std::atomic<int> failures{0};
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        const auto d = s.find_dish("gazpacho");
        if (!d || d->ingredients.size() != 9) ++failures;
      }
    });
  }
  for (int i = 0; i < 5; ++i) s.import(menu());
  for (auto &r : readers) r.join();
  EXPECT_EQ(failures.load(), 0);
}

TEST(Dialog, TwoQuestionsWithThreeAnswersEach) {
  const auto s = menu_store();
  const auto dish = lookup_dish(*s, "bread with tomato");
  const auto flagged = flag_dish(*s, dish, set_profile(*s, {"garlic intolerance"}, {}));
  LanguagePair langs;
  langs.lexicon = parse_lexicon(io::read_file(testing::data_path("lexicon.tsv")));
  const auto q = dialog_templates(dish, flagged, templates(), langs);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].template_id, "remove");
  EXPECT_EQ(q[1].template_id, "clarify");
  EXPECT_EQ(q[0].question.source, "¿Pueden preparar pan con tomate sin ajo?");
  EXPECT_EQ(q[0].question.target, "Can you prepare bread with tomato without garlic?");
  for (const auto &x : q) {
    EXPECT_EQ(x.ingredient, "garlic");
    ASSERT_EQ(x.answers.size(), 3u);
    for (const auto &a : x.answers) {
      EXPECT_FALSE(a.source.empty());
      EXPECT_FALSE(a.target.empty());
    }
  }
}

TEST(Dialog, EmptyAndOrdered) {
  const auto s = menu_store();
  const auto dish = lookup_dish(*s, "ham and cheese sandwich");
  EXPECT_TRUE(dialog_templates(dish, {}, templates(), {}).empty());
  const auto flagged = flag_dish(*s, dish, set_profile(*s, {}, {"ham", "cheese"}));
  const auto q = dialog_templates(dish, flagged, templates(), {});
  ASSERT_EQ(q.size(), 4u);
  EXPECT_EQ(q[0].ingredient, "cheese");
  EXPECT_EQ(q[2].ingredient, "ham");
  // Without a lexicon the local text falls back to the original names.
  EXPECT_NE(q[0].question.source.find("cheese"), std::string::npos);
}

TEST(Dialog, TemplateValidation) {
  EXPECT_THROW(parse_dialog_templates("not json"), ParseError);
  EXPECT_THROW(parse_dialog_templates("{}"), DataError);
  EXPECT_THROW(parse_dialog_templates(R"([{"id":"remove"}])"), DataError);
  const auto only_remove = parse_dialog_templates(
      R"([{"id":"remove","source":"s","target":"t","answers":[]}])");
  Dish d;
  d.name = "x";
  EXPECT_THROW(dialog_templates(d, {FlaggedIngredient{"garlic", false, {}, {}}}, only_remove, {}),
               DataError);
}

TEST(Dialog, LexiconParsing) {
  const auto lex = parse_lexicon("# comment\ngarlic\tajo\n\nbread\tpan\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.at("garlic"), "ajo");
  EXPECT_THROW(parse_lexicon("garlic\n"), ParseError);
}

}  // namespace
}  // namespace menumt
