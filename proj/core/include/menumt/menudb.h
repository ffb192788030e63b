#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace menumt {

// ---------------------------------------------------------------------------
// Dish DSL
//
//   #bread with tomato      dish name; the block runs until the next '#'
//   $bread-tomato           image of the dish (optional, right after '#')
//   -bread                  ingredient
//   =toasted bread          substitute for the previous ingredient
//   -olive oil
//   $oil                    image of the ingredient (right after '-')
//   -+garlic                optional ingredient
//
// Lines are trimmed and blank lines ignored. Without '$' the image name is
// the dish or ingredient name.

struct IngredientRecord {
  std::string name;
  std::string image;
  bool optional = false;
  std::vector<std::string> substitutes;

  friend bool operator==(const IngredientRecord &, const IngredientRecord &) = default;
};

struct DishRecord {
  std::string name;
  std::string image;
  std::vector<IngredientRecord> ingredients;

  friend bool operator==(const DishRecord &, const DishRecord &) = default;
};

std::vector<DishRecord> parse_dsl(std::string_view text);
std::string serialize_dsl(const std::vector<DishRecord> &dishes);

// ---------------------------------------------------------------------------
// Store

struct ImageRef {
  std::int64_t id = 0;
  std::string name;
  std::string bytes;

  // Sniffed from the payload; placeholder bytes give octet-stream.
  std::string content_type() const;
};

// One ingredient line of a dish. Substitutes appear as their own entries
// with `substitute_for` set, right after the ingredient they replace.
struct IngredientUse {
  std::int64_t ingredient_id = 0;
  std::string name;
  bool optional = false;
  std::optional<std::string> substitute_for;
  std::vector<std::string> substitutes;
  std::int64_t image_id = 0;
  std::string image;
};

struct Dish {
  std::int64_t id = 0;
  std::string name;
  std::int64_t image_id = 0;
  std::string image;
  std::vector<IngredientUse> ingredients;

  nlohmann::json to_json() const;
};

struct Ingredient {
  std::int64_t id = 0;
  std::string name;
  std::vector<std::pair<std::int64_t, std::string>> images;  // (id, name)
  std::vector<std::string> dishes;                          // sorted

  nlohmann::json to_json() const;
};

struct DietProfile {
  std::int64_t id = 0;
  std::vector<std::string> conditions;
  // Flagged ingredient names, sorted.
  std::vector<std::string> flagged_ingredients;

  nlohmann::json to_json() const;
};

struct FlaggedIngredient {
  std::string name;
  bool optional = false;
  std::optional<std::string> substitute_for;
  // Conditions that flag it; std::nullopt marks a user-added flag.
  std::vector<std::optional<std::string>> reasons;

  nlohmann::json to_json() const;
};

// Supplies image payloads by image name. Returning std::nullopt stores an
// empty placeholder.
using ImageLoader = std::function<std::optional<std::string>(const std::string &name)>;

// Looks for <dir>/<name>.{jpg,jpeg,png,gif}.
ImageLoader directory_image_loader(std::string dir);

// Embedded relational store (SQLite). Core relations: ingredients, dishes,
// images, dish_ingredients, dish_images, ingredient_images. Flagging adds
// conditions, condition_ingredients, profiles, profile_conditions and
// flags(profile_id, condition_id NULL, ingredient_id), where a NULL
// condition marks an ingredient the user added directly.
//
// Single writer, many readers: imports and profile creation take an
// exclusive lock, queries a shared one.
class Store {
 public:
  // ":memory:" for a private in-memory database.
  explicit Store(const std::string &path = ":memory:");
  ~Store();
  Store(const Store &) = delete;
  Store &operator=(const Store &) = delete;

  // Upserts by name. A re-imported dish has its relations replaced.
  void import(const std::vector<DishRecord> &dishes, const ImageLoader &images = {});

  // "condition<TAB>ingredient" per line; ingredients must exist.
  void import_conditions(std::string_view text);

  std::optional<Dish> find_dish(const std::string &name) const;
  std::optional<Ingredient> find_ingredient(const std::string &name) const;
  std::optional<ImageRef> image(std::int64_t id) const;
  std::vector<std::string> dish_names() const;
  std::vector<std::string> ingredient_names() const;
  std::vector<std::string> condition_names() const;

  // Throws DataError for unknown conditions or ingredients.
  DietProfile create_profile(const std::vector<std::string> &conditions,
                             const std::vector<std::string> &user_ingredients);
  std::optional<DietProfile> profile(std::int64_t id) const;

  // Ingredient name -> flagging conditions (nullopt for user-added) for a
  // profile. Empty for unknown profiles.
  std::map<std::string, std::vector<std::optional<std::string>>> flags(std::int64_t profile_id) const;

  // Every relation as sorted rows; used to compare stores.
  nlohmann::json dump() const;

  // Row count per relation name.
  std::map<std::string, std::size_t> relation_sizes() const;

 private:
  struct Db;
  std::unique_ptr<Db> db_;
  mutable std::shared_mutex mutex_;
};

// Thin free-function surface over Store.
Store &populate_store(Store &store, const std::vector<DishRecord> &records,
                      const ImageLoader &images = {});
Dish lookup_dish(const Store &store, const std::string &name);              // throws NotFound
Ingredient lookup_ingredient(const Store &store, const std::string &name);  // throws NotFound
DietProfile set_profile(Store &store, const std::vector<std::string> &conditions,
                        const std::vector<std::string> &user_ingredients);

// Ingredients of the dish (substitutes included) that the profile flags,
// ordered by name.
std::vector<FlaggedIngredient> flag_dish(const Store &store, const Dish &dish,
                                         const DietProfile &profile);

// ---------------------------------------------------------------------------
// Bilingual dialog

struct DialogText {
  std::string source;  // local (menu) language, shown to the staff
  std::string target;  // user's language
};

struct DialogTemplateDef {
  std::string id;
  DialogText question;
  std::vector<DialogText> answers;
};

// JSON: [{id, source, target, answers:[{source, target}]}]. Texts may use
// {ingredient} and {dish} placeholders.
std::vector<DialogTemplateDef> parse_dialog_templates(std::string_view json_text);

struct LanguagePair {
  std::string source_lang = "es";
  std::string target_lang = "en";
  // User-language name -> local-language name for dish/ingredient names.
  std::map<std::string, std::string> lexicon;
};

struct DialogQuestion {
  std::string template_id;
  std::string ingredient;
  DialogText question;
  std::vector<DialogText> answers;

  nlohmann::json to_json() const;
};

inline constexpr std::string_view kRemovalTemplate = "remove";
inline constexpr std::string_view kClarifyTemplate = "clarify";

// One removal request and one clarification per flagged ingredient, in
// ingredient-name order. Throws DataError if either template is missing.
std::vector<DialogQuestion> dialog_templates(const Dish &dish,
                                             const std::vector<FlaggedIngredient> &flagged,
                                             const std::vector<DialogTemplateDef> &templates,
                                             const LanguagePair &languages);

// "user-language<TAB>local-language" per line.
std::map<std::string, std::string> parse_lexicon(std::string_view text);

}  // namespace menumt
