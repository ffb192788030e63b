#include "menumt/error.h"
#include "menumt/menudb.h"
#include "menumt/text.h"

namespace menumt {

namespace {

enum class Prev { kNone, kDish, kDishImage, kIngredient, kIngredientImage, kSubstitute };

std::string name_after(std::string_view line, std::size_t symbol_len) {
  return std::string(text::trim(line.substr(symbol_len)));
}

}  // namespace

std::vector<DishRecord> parse_dsl(std::string_view input) {
  if (!text::is_valid_utf8(input)) throw ParseError("DSL is not valid UTF-8");
  std::vector<DishRecord> dishes;
  Prev prev = Prev::kNone;
  std::size_t line_no = 0;
  for (auto raw : text::split(input, '\n')) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;

    const char symbol = line.front();
    if (symbol != '#' && dishes.empty()) {
      throw ParseError("expected '#' to start a dish", line_no);
    }
    switch (symbol) {
      case '#': {
        DishRecord dish;
        dish.name = name_after(line, 1);
        if (dish.name.empty()) throw ParseError("empty dish name", line_no);
        dish.image = dish.name;
        dishes.push_back(std::move(dish));
        prev = Prev::kDish;
        break;
      }
      case '-': {
        const bool optional = line.size() > 1 && line[1] == '+';
        IngredientRecord ingredient;
        ingredient.name = name_after(line, optional ? 2 : 1);
        if (ingredient.name.empty()) throw ParseError("empty ingredient name", line_no);
        ingredient.image = ingredient.name;
        ingredient.optional = optional;
        dishes.back().ingredients.push_back(std::move(ingredient));
        prev = Prev::kIngredient;
        break;
      }
      case '=': {
        if (prev != Prev::kIngredient && prev != Prev::kIngredientImage &&
            prev != Prev::kSubstitute) {
          throw ParseError("'=' must follow a '-' ingredient line", line_no);
        }
        auto name = name_after(line, 1);
        if (name.empty()) throw ParseError("empty substitute name", line_no);
        dishes.back().ingredients.back().substitutes.push_back(std::move(name));
        prev = Prev::kSubstitute;
        break;
      }
      case '$': {
        auto name = name_after(line, 1);
        if (name.empty()) throw ParseError("empty image name", line_no);
        if (prev == Prev::kDish) {
          dishes.back().image = std::move(name);
          prev = Prev::kDishImage;
        } else if (prev == Prev::kIngredient) {
          dishes.back().ingredients.back().image = std::move(name);
          prev = Prev::kIngredientImage;
        } else {
          throw ParseError("'$' must directly follow a '#' or '-' line", line_no);
        }
        break;
      }
      default:
        throw ParseError("unrecognized line \"" + std::string(line) + "\"", line_no);
    }
  }
  return dishes;
}

std::string serialize_dsl(const std::vector<DishRecord> &dishes) {
  std::string out;
  for (const auto &d : dishes) {
    out += "#" + d.name + "\n";
    if (d.image != d.name) out += "$" + d.image + "\n";
    for (const auto &i : d.ingredients) {
      out += (i.optional ? "-+" : "-") + i.name + "\n";
      if (i.image != i.name) out += "$" + i.image + "\n";
      for (const auto &s : i.substitutes) out += "=" + s + "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace menumt
