#include <algorithm>

#include "menumt/error.h"
#include "menumt/menudb.h"
#include "menumt/text.h"

namespace menumt {

nlohmann::json Dish::to_json() const {
  nlohmann::json ings = nlohmann::json::array();
  for (const auto &u : ingredients) {
    ings.push_back({{"name", u.name},
                    {"optional", u.optional},
                    {"substitute_for", u.substitute_for ? nlohmann::json(*u.substitute_for)
                                                        : nlohmann::json(nullptr)},
                    {"substitutes", u.substitutes},
                    {"image_id", u.image_id},
                    {"image", u.image}});
  }
  return {{"id", id}, {"name", name}, {"image_id", image_id}, {"image", image},
          {"ingredients", ings}};
}

nlohmann::json Ingredient::to_json() const {
  nlohmann::json imgs = nlohmann::json::array();
  for (const auto &[img_id, img_name] : images) imgs.push_back({{"id", img_id}, {"name", img_name}});
  return {{"id", id}, {"name", name}, {"images", imgs}, {"dishes", dishes}};
}

nlohmann::json DietProfile::to_json() const {
  return {{"id", id}, {"conditions", conditions}, {"flagged_ingredients", flagged_ingredients}};
}

nlohmann::json FlaggedIngredient::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto &c : reasons) r.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
  return {{"name", name},
          {"optional", optional},
          {"substitute_for", substitute_for ? nlohmann::json(*substitute_for)
                                            : nlohmann::json(nullptr)},
          {"reasons", r}};
}

std::vector<FlaggedIngredient> flag_dish(const Store &store, const Dish &dish,
                                         const DietProfile &profile) {
  const auto flags = store.flags(profile.id);
  std::map<std::string, FlaggedIngredient> hits;
  for (const auto &use : dish.ingredients) {
    const auto it = flags.find(use.name);
    if (it == flags.end() || hits.count(use.name)) continue;
    hits[use.name] = FlaggedIngredient{use.name, use.optional, use.substitute_for, it->second};
  }
  std::vector<FlaggedIngredient> out;
  for (auto &[name, f] : hits) out.push_back(std::move(f));
  return out;
}

std::vector<DialogTemplateDef> parse_dialog_templates(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(std::string("dialog templates: ") + e.what());
  }
  if (!j.is_array()) throw DataError("dialog templates must be a JSON array");
  std::vector<DialogTemplateDef> out;
  try {
    for (const auto &t : j) {
      DialogTemplateDef def;
      def.id = t.at("id").get<std::string>();
      def.question = {t.at("source").get<std::string>(), t.at("target").get<std::string>()};
      for (const auto &a : t.value("answers", nlohmann::json::array())) {
        def.answers.push_back({a.at("source").get<std::string>(), a.at("target").get<std::string>()});
      }
      out.push_back(std::move(def));
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("dialog templates: ") + e.what());
  }
  return out;
}

namespace {

std::string replace_all(std::string s, std::string_view key, const std::string &value) {
  std::size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
  return s;
}

std::string fill(const std::string &tmpl, const std::string &dish, const std::string &ingredient) {
  return replace_all(replace_all(tmpl, "{dish}", dish), "{ingredient}", ingredient);
}

const DialogTemplateDef &find_template(const std::vector<DialogTemplateDef> &templates,
                                       std::string_view id) {
  const auto it = std::find_if(templates.begin(), templates.end(),
                               [id](const DialogTemplateDef &t) { return t.id == id; });
  if (it == templates.end()) throw DataError("missing dialog template \"" + std::string(id) + "\"");
  return *it;
}

std::string local_name(const LanguagePair &languages, const std::string &name) {
  const auto it = languages.lexicon.find(name);
  return it == languages.lexicon.end() ? name : it->second;
}

}  // namespace

std::vector<DialogQuestion> dialog_templates(const Dish &dish,
                                             const std::vector<FlaggedIngredient> &flagged,
                                             const std::vector<DialogTemplateDef> &templates,
                                             const LanguagePair &languages) {
  const auto &removal = find_template(templates, kRemovalTemplate);
  const auto &clarify = find_template(templates, kClarifyTemplate);
  std::vector<const FlaggedIngredient *> order;
  for (const auto &f : flagged) order.push_back(&f);
  std::sort(order.begin(), order.end(),
            [](const auto *a, const auto *b) { return a->name < b->name; });

  const std::string dish_local = local_name(languages, dish.name);
  std::vector<DialogQuestion> out;
  for (const auto *f : order) {
    const std::string ing_local = local_name(languages, f->name);
    for (const auto *def : {&removal, &clarify}) {
      DialogQuestion q;
      q.template_id = def->id;
      q.ingredient = f->name;
      q.question = {fill(def->question.source, dish_local, ing_local),
                    fill(def->question.target, dish.name, f->name)};
      for (const auto &a : def->answers) {
        q.answers.push_back({fill(a.source, dish_local, ing_local),
                             fill(a.target, dish.name, f->name)});
      }
      out.push_back(std::move(q));
    }
  }
  return out;
}

nlohmann::json DialogQuestion::to_json() const {
  nlohmann::json ans = nlohmann::json::array();
  for (const auto &a : answers) ans.push_back({{"source", a.source}, {"target", a.target}});
  return {{"template", template_id},
          {"ingredient", ingredient},
          {"source", question.source},
          {"target", question.target},
          {"answers", ans}};
}

std::map<std::string, std::string> parse_lexicon(std::string_view input) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (auto line : text::split(input, '\n')) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = trimmed.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected user<TAB>local", line_no);
    const std::string user(text::trim(trimmed.substr(0, tab)));
    const std::string local(text::trim(trimmed.substr(tab + 1)));
    if (user.empty() || local.empty()) throw ParseError("empty lexicon field", line_no);
    out[user] = local;
  }
  return out;
}

}  // namespace menumt
