#include "cfcdc/data/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "cfcdc/error.hpp"

namespace cfcdc::data {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80 || c == '_';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> kSpecial = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  return kSpecial;
}

}  // namespace

std::vector<Token> split_words(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    if (is_word_char(text[i])) {
      while (i < text.size()) {
        if (is_word_char(text[i])) {
          ++i;
        } else if (text[i] == '.' && i > begin && is_digit(text[i - 1]) && i + 1 < text.size() &&
                   is_digit(text[i + 1])) {
          ++i;
        } else {
          break;
        }
      }
    } else {
      ++i;
    }
    out.push_back(Token{lower(text.substr(begin, i - begin)), begin, i});
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& s : special_tokens()) {
    index_.emplace(s, static_cast<int>(words_.size()));
    words_.push_back(s);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (auto& t : tokens) {
    if (v.index_.contains(t)) continue;
    v.index_.emplace(t, static_cast<int>(v.words_.size()));
    v.words_.push_back(std::move(t));
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, int min_count) {
  std::map<std::string, int> counts;
  for (const auto& t : texts) {
    for (auto& tok : split_words(t)) ++counts[tok.text];
  }
  std::vector<std::pair<std::string, int>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [w, c] : items) {
    if (c >= min_count) words.push_back(w);
  }
  return from_tokens(std::move(words));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReferenceError("cannot open vocabulary: " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) words.push_back(line);
  const auto& special = special_tokens();
  if (words.size() < special.size() || !std::equal(special.begin(), special.end(), words.begin())) {
    throw FormatError("vocabulary file does not start with the special tokens: " + path.string());
  }
  return from_tokens(std::vector<std::string>(words.begin() + static_cast<long>(special.size()), words.end()));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ReferenceError("cannot write vocabulary: " + path.string());
  for (const auto& w : words_) out << w << '\n';
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

CandidateInput build_candidate_input(const ColumnSpec& column, const std::string& question) {
  const std::string raw = std::string(type_word(column.ctype)) + " " + column.name + " : " + question;
  std::string norm;
  norm.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !norm.empty();
      continue;
    }
    if (pending_space) norm.push_back(' ');
    pending_space = false;
    norm.push_back(c);
  }
  return CandidateInput{column, question, std::move(norm)};
}

TokenizedInput tokenize(const CandidateInput& candidate, const Vocabulary& vocab, int max_seq_len) {
  if (max_seq_len < 8) throw InputError("max_seq_len must be at least 8");
  const auto col_tokens =
      split_words(std::string(type_word(candidate.column.ctype)) + " " + candidate.column.name);
  const auto q_tokens = split_words(candidate.question);

  int n_col = static_cast<int>(col_tokens.size());
  int n_q = static_cast<int>(q_tokens.size());
  if (3 + n_col + n_q > max_seq_len) n_q = std::max(0, max_seq_len - 3 - n_col);
  if (3 + n_col + n_q > max_seq_len) n_col = std::max(1, max_seq_len - 3);

  TokenizedInput out;
  out.column_index = candidate.column.index;
  out.token_ids.reserve(static_cast<std::size_t>(3 + n_col + n_q));
  out.token_ids.push_back(Vocabulary::kCls);
  for (int i = 0; i < n_col; ++i) out.token_ids.push_back(vocab.id(col_tokens[static_cast<std::size_t>(i)].text));
  out.token_ids.push_back(Vocabulary::kSep);
  out.question_start = static_cast<int>(out.token_ids.size());
  for (int i = 0; i < n_q; ++i) {
    const Token& t = q_tokens[static_cast<std::size_t>(i)];
    out.token_ids.push_back(vocab.id(t.text));
    out.question_spans.emplace_back(t.begin, t.end);
  }
  out.token_ids.push_back(Vocabulary::kSep);
  out.segment_mask.assign(out.token_ids.size(), 0);
  for (int i = 0; i < n_q; ++i) out.segment_mask[static_cast<std::size_t>(out.question_start + i)] = 1;

  // The leading type word is not part of the column name.
  out.match_mask.assign(out.token_ids.size(), 0);
  for (int i = 1; i < n_col; ++i) {
    for (int j = 0; j < n_q; ++j) {
      if (col_tokens[static_cast<std::size_t>(i)].text != q_tokens[static_cast<std::size_t>(j)].text) continue;
      out.match_mask[static_cast<std::size_t>(1 + i)] = 1;
      out.match_mask[static_cast<std::size_t>(out.question_start + j)] = 1;
    }
  }
  return out;
}

}  // namespace cfcdc::data
