#include "menumt/corpus.h"

#include <fstream>
#include <set>
#include <sstream>

#include "menumt/error.h"
#include "menumt/io.h"

namespace menumt {

std::string_view to_string(Side side) { return side == Side::kSource ? "source" : "target"; }

Side side_from_string(std::string_view s) {
  if (s == "source" || s == "src") return Side::kSource;
  if (s == "target" || s == "tgt") return Side::kTarget;
  throw ParseError("unknown side \"" + std::string(s) + "\" (expected source|target)");
}

const Phrase &side_of(const PhrasePair &pair, Side side) {
  return side == Side::kSource ? pair.source : pair.target;
}

Phrase &side_of(PhrasePair &pair, Side side) {
  return side == Side::kSource ? pair.source : pair.target;
}

ParallelCorpus parse_corpus(std::string_view raw, JoinerPolicy policy) {
  if (!text::is_valid_utf8(raw)) throw ParseError("corpus is not valid UTF-8");
  ParallelCorpus corpus;
  std::size_t line_no = 0;
  for (auto line : text::split(raw, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;

    const auto fields = text::split(line, '\t');
    if (fields.size() < 2) throw ParseError("missing target field", line_no);
    if (fields.size() > 4) throw ParseError("too many fields", line_no);

    PhrasePair pair;
    try {
      pair.source = tokenize(fields[0], policy);
      pair.target = tokenize(fields[1], policy);
    } catch (const ParseError &e) {
      throw ParseError(e.what(), line_no);
    }
    if (pair.source.empty()) throw ParseError("empty source side", line_no);
    if (pair.target.empty()) throw ParseError("empty target side", line_no);

    if (fields.size() >= 3) {
      const auto flag = text::trim(fields[2]);
      if (flag == "std" || flag.empty()) {
        pair.standardized = true;
      } else if (flag == "121") {
        pair.standardized = false;
      } else {
        throw ParseError("unknown flag \"" + std::string(flag) + "\" (expected std|121)", line_no);
      }
    }
    if (fields.size() == 4) {
      const auto topic = text::trim(fields[3]);
      if (!topic.empty()) pair.topic = std::string(topic);
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

ParallelCorpus read_corpus(const std::string &path, JoinerPolicy policy) {
  return parse_corpus(io::read_file(path), policy);
}

std::string serialize_corpus(const ParallelCorpus &corpus) {
  std::string out;
  for (const auto &p : corpus.pairs) {
    out += text::join(p.source);
    out += '\t';
    out += text::join(p.target);
    out += '\t';
    out += p.standardized ? "std" : "121";
    out += '\t';
    out += p.topic;
    out += '\n';
  }
  return out;
}

void write_corpus(const std::string &path, const ParallelCorpus &corpus) {
  io::write_file(path, serialize_corpus(corpus));
}

NgramStats corpus_stats(const ParallelCorpus &corpus, Side side, std::size_t nmax) {
  if (nmax < 1) throw Error("corpus_stats: nmax must be >= 1");
  NgramStats stats;
  std::vector<std::set<std::string>> seen(nmax + 1);
  for (const auto &pair : corpus.pairs) {
    const Phrase &tokens = side_of(pair, side);
    ++stats.line_count;
    stats.word_count += tokens.size();
    for (std::size_t n = 1; n <= nmax; ++n) {
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = i + 1; j < i + n; ++j) {
          key += ' ';
          key += tokens[j];
        }
        seen[n].insert(std::move(key));
      }
    }
  }
  for (std::size_t n = 1; n <= nmax; ++n) stats.distinct_ngrams[n] = seen[n].size();
  return stats;
}

nlohmann::json NgramStats::to_json() const {
  nlohmann::json ngrams = nlohmann::json::object();
  for (const auto &[n, count] : distinct_ngrams) ngrams[std::to_string(n)] = count;
  return {{"lines", line_count}, {"words", word_count}, {"ngrams", ngrams}};
}

}  // namespace menumt
