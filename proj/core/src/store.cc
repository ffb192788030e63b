#include <sqlite3.h>

#include <algorithm>
#include <filesystem>
#include <mutex>
#include <set>

#include "menumt/error.h"
#include "menumt/io.h"
#include "menumt/menudb.h"
#include "menumt/text.h"

namespace menumt {

namespace {

constexpr const char *kSchema = R"sql(
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS images (
  id   INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE,
  data BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS ingredients (
  id   INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS dishes (
  id   INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS dish_ingredients (
  dish_id        INTEGER NOT NULL REFERENCES dishes(id),
  position       INTEGER NOT NULL,
  ingredient_id  INTEGER NOT NULL REFERENCES ingredients(id),
  optional       INTEGER NOT NULL,
  substitute_for INTEGER REFERENCES ingredients(id),
  image_id       INTEGER NOT NULL REFERENCES images(id),
  PRIMARY KEY (dish_id, position)
);
CREATE TABLE IF NOT EXISTS dish_images (
  dish_id  INTEGER NOT NULL REFERENCES dishes(id),
  image_id INTEGER NOT NULL REFERENCES images(id),
  PRIMARY KEY (dish_id, image_id)
);
CREATE TABLE IF NOT EXISTS ingredient_images (
  ingredient_id INTEGER NOT NULL REFERENCES ingredients(id),
  image_id      INTEGER NOT NULL REFERENCES images(id),
  PRIMARY KEY (ingredient_id, image_id)
);
CREATE TABLE IF NOT EXISTS conditions (
  id   INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS condition_ingredients (
  condition_id  INTEGER NOT NULL REFERENCES conditions(id),
  ingredient_id INTEGER NOT NULL REFERENCES ingredients(id),
  PRIMARY KEY (condition_id, ingredient_id)
);
CREATE TABLE IF NOT EXISTS profiles (
  id INTEGER PRIMARY KEY
);
CREATE TABLE IF NOT EXISTS profile_conditions (
  profile_id   INTEGER NOT NULL REFERENCES profiles(id),
  condition_id INTEGER NOT NULL REFERENCES conditions(id),
  PRIMARY KEY (profile_id, condition_id)
);
CREATE TABLE IF NOT EXISTS flags (
  profile_id    INTEGER NOT NULL REFERENCES profiles(id),
  condition_id  INTEGER REFERENCES conditions(id),
  ingredient_id INTEGER NOT NULL REFERENCES ingredients(id)
);
)sql";

constexpr const char *kRelations[] = {
    "images",     "ingredients",           "dishes",   "dish_ingredients",
    "dish_images", "ingredient_images",    "conditions", "condition_ingredients",
    "profiles",   "profile_conditions",    "flags"};

class Statement {
 public:
  Statement(sqlite3 *db, const char *sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement &) = delete;
  Statement &operator=(const Statement &) = delete;

  Statement &bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  Statement &bind(int i, std::string_view v) {
    check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement &bind_blob(int i, std::string_view v) {
    check(sqlite3_bind_blob(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement &bind_null(int i) {
    check(sqlite3_bind_null(stmt_, i));
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw DataError(std::string("sqlite: ") + sqlite3_errmsg(db_));
  }
  void run() {
    while (step()) {
    }
  }

  std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string str(int col) const {
    const auto *p = reinterpret_cast<const char *>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::string blob(int col) const {
    const auto *p = static_cast<const char *>(sqlite3_column_blob(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  int columns() const { return sqlite3_column_count(stmt_); }
  int type(int col) const { return sqlite3_column_type(stmt_, col); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) throw Error(std::string("sqlite bind: ") + sqlite3_errmsg(db_));
  }

  sqlite3 *db_;
  sqlite3_stmt *stmt_ = nullptr;
};

void exec(sqlite3 *db, const char *sql) {
  char *err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw DataError("sqlite: " + msg);
  }
}

class Transaction {
 public:
  explicit Transaction(sqlite3 *db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec(db_, "COMMIT");
    done_ = true;
  }

 private:
  sqlite3 *db_;
  bool done_ = false;
};

std::optional<std::int64_t> id_by_name(sqlite3 *db, const char *table, const std::string &name) {
  const std::string sql = std::string("SELECT id FROM ") + table + " WHERE name = ?1";
  Statement st(db, sql.c_str());
  st.bind(1, name);
  if (st.step()) return st.i64(0);
  return std::nullopt;
}

std::int64_t upsert_name(sqlite3 *db, const char *table, const std::string &name) {
  {
    const std::string sql = std::string("INSERT OR IGNORE INTO ") + table + " (name) VALUES (?1)";
    Statement st(db, sql.c_str());
    st.bind(1, name).run();
  }
  return *id_by_name(db, table, name);
}

std::int64_t upsert_image(sqlite3 *db, const std::string &name, const ImageLoader &loader) {
  std::optional<std::string> bytes;
  if (loader) bytes = loader(name);
  if (auto id = id_by_name(db, "images", name)) {
    if (bytes) {
      Statement st(db, "UPDATE images SET data = ?2 WHERE id = ?1");
      st.bind(1, *id).bind_blob(2, *bytes).run();
    }
    return *id;
  }
  Statement st(db, "INSERT INTO images (name, data) VALUES (?1, ?2)");
  st.bind(1, name).bind_blob(2, bytes.value_or(std::string())).run();
  return sqlite3_last_insert_rowid(db);
}

}  // namespace

struct Store::Db {
  sqlite3 *handle = nullptr;
  ~Db() {
    if (handle) sqlite3_close(handle);
  }
};

std::string ImageRef::content_type() const {
  auto starts = [this](std::string_view magic) { return bytes.starts_with(magic); };
  if (starts("\x89PNG")) return "image/png";
  if (starts("\xFF\xD8\xFF")) return "image/jpeg";
  if (starts("GIF8")) return "image/gif";
  return "application/octet-stream";
}

Store::Store(const std::string &path) : db_(std::make_unique<Db>()) {
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(path.c_str(), &db_->handle, flags, nullptr) != SQLITE_OK) {
    const std::string msg = db_->handle ? sqlite3_errmsg(db_->handle) : "out of memory";
    throw Error("cannot open store " + path + ": " + msg);
  }
  exec(db_->handle, kSchema);
}

Store::~Store() = default;

void Store::import(const std::vector<DishRecord> &dishes, const ImageLoader &images) {
  std::unique_lock lock(mutex_);
  sqlite3 *db = db_->handle;
  Transaction tx(db);
  for (const auto &d : dishes) {
    if (d.name.empty()) throw DataError("dish with empty name");
    const std::int64_t dish_id = upsert_name(db, "dishes", d.name);
    Statement(db, "DELETE FROM dish_ingredients WHERE dish_id = ?1").bind(1, dish_id).run();
    Statement(db, "DELETE FROM dish_images WHERE dish_id = ?1").bind(1, dish_id).run();

    const std::int64_t dish_image = upsert_image(db, d.image, images);
    Statement(db, "INSERT OR IGNORE INTO dish_images (dish_id, image_id) VALUES (?1, ?2)")
        .bind(1, dish_id)
        .bind(2, dish_image)
        .run();

    std::int64_t position = 0;
    auto add_use = [&](const std::string &name, const std::string &image, bool optional,
                       std::optional<std::int64_t> substitute_for) {
      const std::int64_t ing = upsert_name(db, "ingredients", name);
      const std::int64_t img = upsert_image(db, image, images);
      Statement(db, "INSERT OR IGNORE INTO ingredient_images (ingredient_id, image_id) "
                    "VALUES (?1, ?2)")
          .bind(1, ing)
          .bind(2, img)
          .run();
      Statement st(db,
                   "INSERT INTO dish_ingredients "
                   "(dish_id, position, ingredient_id, optional, substitute_for, image_id) "
                   "VALUES (?1, ?2, ?3, ?4, ?5, ?6)");
      st.bind(1, dish_id).bind(2, position++).bind(3, ing).bind(4, optional ? 1 : 0);
      if (substitute_for) {
        st.bind(5, *substitute_for);
      } else {
        st.bind_null(5);
      }
      st.bind(6, img).run();
      return ing;
    };
    for (const auto &i : d.ingredients) {
      const std::int64_t ing = add_use(i.name, i.image, i.optional, std::nullopt);
      for (const auto &s : i.substitutes) add_use(s, s, i.optional, ing);
    }
  }
  tx.commit();
}

void Store::import_conditions(std::string_view text) {
  std::unique_lock lock(mutex_);
  sqlite3 *db = db_->handle;
  Transaction tx(db);
  std::size_t line_no = 0;
  for (auto line : text::split(text, '\n')) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected condition<TAB>ingredient", line_no);
    const std::string condition(text::trim(line.substr(0, tab)));
    const std::string ingredient(text::trim(line.substr(tab + 1)));
    if (condition.empty() || ingredient.empty()) throw ParseError("empty field", line_no);
    const auto ing = id_by_name(db, "ingredients", ingredient);
    if (!ing) throw ParseError("unknown ingredient \"" + ingredient + "\"", line_no);
    const std::int64_t cond = upsert_name(db, "conditions", condition);
    Statement(db, "INSERT OR IGNORE INTO condition_ingredients (condition_id, ingredient_id) "
                  "VALUES (?1, ?2)")
        .bind(1, cond)
        .bind(2, *ing)
        .run();
  }
  tx.commit();
}

std::optional<Dish> Store::find_dish(const std::string &name) const {
  std::shared_lock lock(mutex_);
  sqlite3 *db = db_->handle;
  Dish dish;
  {
    Statement st(db,
                 "SELECT d.id, d.name, i.id, i.name FROM dishes d "
                 "JOIN dish_images di ON di.dish_id = d.id "
                 "JOIN images i ON i.id = di.image_id WHERE d.name = ?1 ORDER BY i.id LIMIT 1");
    st.bind(1, name);
    if (!st.step()) return std::nullopt;
    dish.id = st.i64(0);
    dish.name = st.str(1);
    dish.image_id = st.i64(2);
    dish.image = st.str(3);
  }
  Statement st(db,
               "SELECT g.id, g.name, r.optional, s.name, im.id, im.name "
               "FROM dish_ingredients r "
               "JOIN ingredients g ON g.id = r.ingredient_id "
               "LEFT JOIN ingredients s ON s.id = r.substitute_for "
               "JOIN images im ON im.id = r.image_id "
               "WHERE r.dish_id = ?1 ORDER BY r.position");
  st.bind(1, dish.id);
  while (st.step()) {
    IngredientUse use;
    use.ingredient_id = st.i64(0);
    use.name = st.str(1);
    use.optional = st.i64(2) != 0;
    if (!st.is_null(3)) use.substitute_for = st.str(3);
    use.image_id = st.i64(4);
    use.image = st.str(5);
    dish.ingredients.push_back(std::move(use));
  }
  for (const auto &use : dish.ingredients) {
    if (!use.substitute_for) continue;
    for (auto &primary : dish.ingredients) {
      if (!primary.substitute_for && primary.name == *use.substitute_for) {
        primary.substitutes.push_back(use.name);
        break;
      }
    }
  }
  return dish;
}

std::optional<Ingredient> Store::find_ingredient(const std::string &name) const {
  std::shared_lock lock(mutex_);
  sqlite3 *db = db_->handle;
  Ingredient ing;
  {
    Statement st(db, "SELECT id, name FROM ingredients WHERE name = ?1");
    st.bind(1, name);
    if (!st.step()) return std::nullopt;
    ing.id = st.i64(0);
    ing.name = st.str(1);
  }
  {
    Statement st(db,
                 "SELECT im.id, im.name FROM ingredient_images r JOIN images im "
                 "ON im.id = r.image_id WHERE r.ingredient_id = ?1 ORDER BY im.name");
    st.bind(1, ing.id);
    while (st.step()) ing.images.emplace_back(st.i64(0), st.str(1));
  }
  Statement st(db,
               "SELECT DISTINCT d.name FROM dish_ingredients r JOIN dishes d ON d.id = r.dish_id "
               "WHERE r.ingredient_id = ?1 ORDER BY d.name");
  st.bind(1, ing.id);
  while (st.step()) ing.dishes.push_back(st.str(0));
  return ing;
}

std::optional<ImageRef> Store::image(std::int64_t id) const {
  std::shared_lock lock(mutex_);
  Statement st(db_->handle, "SELECT id, name, data FROM images WHERE id = ?1");
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return ImageRef{st.i64(0), st.str(1), st.blob(2)};
}

namespace {

std::vector<std::string> names_of(sqlite3 *db, const char *table) {
  const std::string sql = std::string("SELECT name FROM ") + table + " ORDER BY name";
  Statement st(db, sql.c_str());
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.str(0));
  return out;
}

}  // namespace

std::vector<std::string> Store::dish_names() const {
  std::shared_lock lock(mutex_);
  return names_of(db_->handle, "dishes");
}

std::vector<std::string> Store::ingredient_names() const {
  std::shared_lock lock(mutex_);
  return names_of(db_->handle, "ingredients");
}

std::vector<std::string> Store::condition_names() const {
  std::shared_lock lock(mutex_);
  return names_of(db_->handle, "conditions");
}

DietProfile Store::create_profile(const std::vector<std::string> &conditions,
                                  const std::vector<std::string> &user_ingredients) {
  std::unique_lock lock(mutex_);
  sqlite3 *db = db_->handle;
  // Resolve everything before writing so a bad name leaves no partial row.
  std::vector<std::int64_t> condition_ids;
  for (const auto &c : conditions) {
    const auto id = id_by_name(db, "conditions", c);
    if (!id) throw DataError("unknown condition \"" + c + "\"");
    condition_ids.push_back(*id);
  }
  std::vector<std::int64_t> ingredient_ids;
  for (const auto &i : user_ingredients) {
    const auto id = id_by_name(db, "ingredients", i);
    if (!id) throw DataError("unknown ingredient \"" + i + "\"");
    ingredient_ids.push_back(*id);
  }

  Transaction tx(db);
  Statement(db, "INSERT INTO profiles DEFAULT VALUES").run();
  const std::int64_t pid = sqlite3_last_insert_rowid(db);
  for (const std::int64_t c : condition_ids) {
    Statement(db, "INSERT OR IGNORE INTO profile_conditions (profile_id, condition_id) "
                  "VALUES (?1, ?2)")
        .bind(1, pid)
        .bind(2, c)
        .run();
    Statement(db,
              "INSERT INTO flags (profile_id, condition_id, ingredient_id) "
              "SELECT ?1, condition_id, ingredient_id FROM condition_ingredients "
              "WHERE condition_id = ?2")
        .bind(1, pid)
        .bind(2, c)
        .run();
  }
  for (const std::int64_t i : ingredient_ids) {
    Statement(db, "INSERT INTO flags (profile_id, condition_id, ingredient_id) "
                  "VALUES (?1, NULL, ?2)")
        .bind(1, pid)
        .bind(2, i)
        .run();
  }
  tx.commit();
  lock.unlock();
  return *profile(pid);
}

std::optional<DietProfile> Store::profile(std::int64_t id) const {
  std::shared_lock lock(mutex_);
  sqlite3 *db = db_->handle;
  {
    Statement st(db, "SELECT id FROM profiles WHERE id = ?1");
    st.bind(1, id);
    if (!st.step()) return std::nullopt;
  }
  DietProfile p;
  p.id = id;
  {
    Statement st(db,
                 "SELECT c.name FROM profile_conditions r JOIN conditions c "
                 "ON c.id = r.condition_id WHERE r.profile_id = ?1 ORDER BY c.name");
    st.bind(1, id);
    while (st.step()) p.conditions.push_back(st.str(0));
  }
  Statement st(db,
               "SELECT DISTINCT g.name FROM flags f JOIN ingredients g ON g.id = f.ingredient_id "
               "WHERE f.profile_id = ?1 ORDER BY g.name");
  st.bind(1, id);
  while (st.step()) p.flagged_ingredients.push_back(st.str(0));
  return p;
}

std::map<std::string, std::vector<std::optional<std::string>>> Store::flags(
    std::int64_t profile_id) const {
  std::shared_lock lock(mutex_);
  Statement st(db_->handle,
               "SELECT DISTINCT g.name, c.name FROM flags f "
               "JOIN ingredients g ON g.id = f.ingredient_id "
               "LEFT JOIN conditions c ON c.id = f.condition_id "
               "WHERE f.profile_id = ?1 ORDER BY g.name, c.name IS NOT NULL, c.name");
  st.bind(1, profile_id);
  std::map<std::string, std::vector<std::optional<std::string>>> out;
  while (st.step()) {
    auto &reasons = out[st.str(0)];
    if (st.is_null(1)) {
      reasons.push_back(std::nullopt);
    } else {
      reasons.push_back(st.str(1));
    }
  }
  return out;
}

nlohmann::json Store::dump() const {
  std::shared_lock lock(mutex_);
  nlohmann::json out = nlohmann::json::object();
  for (const char *table : kRelations) {
    const std::string sql = std::string("SELECT * FROM ") + table;
    Statement st(db_->handle, sql.c_str());
    std::vector<nlohmann::json> rows;
    while (st.step()) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < st.columns(); ++c) {
        switch (st.type(c)) {
          case SQLITE_NULL:
            row.push_back(nullptr);
            break;
          case SQLITE_INTEGER:
            row.push_back(st.i64(c));
            break;
          case SQLITE_BLOB:
            row.push_back("blob:" + io::sha256_hex(st.blob(c)));
            break;
          default:
            row.push_back(st.str(c));
        }
      }
      rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end());
    out[table] = rows;
  }
  return out;
}

std::map<std::string, std::size_t> Store::relation_sizes() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::size_t> out;
  for (const char *table : kRelations) {
    const std::string sql = std::string("SELECT COUNT(*) FROM ") + table;
    Statement st(db_->handle, sql.c_str());
    st.step();
    out[table] = static_cast<std::size_t>(st.i64(0));
  }
  return out;
}

ImageLoader directory_image_loader(std::string dir) {
  return [dir = std::move(dir)](const std::string &name) -> std::optional<std::string> {
    for (const char *ext : {".jpg", ".jpeg", ".png", ".gif"}) {
      const auto path = std::filesystem::path(dir) / (name + ext);
      std::error_code ec;
      if (std::filesystem::is_regular_file(path, ec)) return io::read_file(path.string());
    }
    return std::nullopt;
  };
}

Store &populate_store(Store &store, const std::vector<DishRecord> &records,
                      const ImageLoader &images) {
  store.import(records, images);
  return store;
}

Dish lookup_dish(const Store &store, const std::string &name) {
  auto dish = store.find_dish(name);
  if (!dish) throw NotFound("unknown dish \"" + name + "\"");
  return *std::move(dish);
}

Ingredient lookup_ingredient(const Store &store, const std::string &name) {
  auto ing = store.find_ingredient(name);
  if (!ing) throw NotFound("unknown ingredient \"" + name + "\"");
  return *std::move(ing);
}

DietProfile set_profile(Store &store, const std::vector<std::string> &conditions,
                        const std::vector<std::string> &user_ingredients) {
  return store.create_profile(conditions, user_ingredients);
}

}  // namespace menumt
