#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfcdc/data/schema.hpp"

namespace cfcdc::data {

// A lowercased word with its [begin, end) byte span in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Whitespace and punctuation splitting. Each punctuation character is its own
// token, except a '.' between two digits, which stays inside the number.
std::vector<Token> split_words(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  Vocabulary();

  // Words sorted by descending frequency, ties lexicographic.
  static Vocabulary build(const std::vector<std::string>& texts, int min_count = 1);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int id(const std::string& word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& tokens() const { return words_; }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// One (column, question) pair: the unit of column-wise ranking.
struct CandidateInput {
  ColumnSpec column;
  std::string question;
  std::string serialized;
};

// "<ctype-word> <name> : <question>" with whitespace runs collapsed; case is kept.
CandidateInput build_candidate_input(const ColumnSpec& column, const std::string& question);

struct TokenizedInput {
  std::vector<int> token_ids;
  std::vector<int> segment_mask;  // 1 on question tokens only
  // 1 on column-name and question tokens whose text occurs in the other segment.
  std::vector<int> match_mask;
  int column_index = 0;
  // Position of the first question token in token_ids.
  int question_start = 0;
  // Byte spans into the original question for each retained question token.
  std::vector<std::pair<std::size_t, std::size_t>> question_spans;

  int length() const { return static_cast<int>(token_ids.size()); }
  int question_length() const { return static_cast<int>(question_spans.size()); }
};

// Layout [CLS] column-tokens [SEP] question-tokens [SEP]. Over-long inputs lose
// question-tail tokens first; the column segment keeps at least one token.
TokenizedInput tokenize(const CandidateInput& candidate, const Vocabulary& vocab, int max_seq_len);

}  // namespace cfcdc::data
