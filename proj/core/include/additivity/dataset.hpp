#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace additivity {

// The nine binary columns of a coded story table: three outcome flags
// (which belief system dominates the story's key message) and six
// predictor flags (a system's values, or anti-values, appear in the
// story).
enum class Flag : int { B = 0, C, T, VB, VT, VC, AVB, AVT, AVC };

inline constexpr std::array<Flag, 9> kAllFlags = {
    Flag::B,   Flag::C,   Flag::T,   Flag::VB, Flag::VT,
    Flag::VC,  Flag::AVB, Flag::AVT, Flag::AVC};

std::string_view flag_name(Flag f);

// Case-insensitive lookup; nullopt if the name is not one of the nine flags.
std::optional<Flag> flag_from_name(std::string_view name);

// One coded line: a story (or one of its characters) with all nine flags.
struct StoryRecord {
  std::string story_id;
  std::array<std::uint8_t, 9> flags{};

  int flag(Flag f) const { return flags[static_cast<int>(f)]; }

  // Throws ValidationError unless value is 0 or 1.
  void set_flag(Flag f, int value);

  bool operator==(const StoryRecord&) const = default;
};

// Immutable ordered collection of coded lines. Row order is preserved by
// load/save because pointwise quantities are indexed by row.
class Dataset {
 public:
  // Throws ValidationError on an empty record list.
  explicit Dataset(std::vector<StoryRecord> records);

  std::size_t size() const { return records_.size(); }
  const std::vector<StoryRecord>& records() const { return records_; }
  const StoryRecord& operator[](std::size_t i) const { return records_[i]; }

  std::vector<int> column(Flag f) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<StoryRecord> records_;
};

// Loads a delimited text table (comma or tab, auto-detected from the header
// line). The header must name all nine flags (case-insensitive); a column
// named id/story_id/story supplies row labels. Other columns are skipped and
// reported through `warnings` when given.
//
// Errors: SchemaError for a missing flag column; ValidationError for a
// non-binary or blank cell (message cites the 1-based data row, the column,
// and the offending text) and for a file with no data rows; IoError if the
// file cannot be read.
Dataset load_dataset(const std::filesystem::path& path,
                     std::vector<std::string>* warnings = nullptr);

// Writes the canonical form: story_id,B,C,T,VB,VT,VC,AVB,AVT,AVC.
// load_dataset(write_dataset(ds)) reproduces ds exactly, in order.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);

// 2x2 contingency counts for a pair of flags; counts sum to n.
struct CrossTab {
  Flag a, b;
  std::array<std::array<std::int64_t, 2>, 2> counts{};

  std::int64_t at(int value_a, int value_b) const {
    return counts[value_a][value_b];
  }
  std::int64_t total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
};

CrossTab cross_tabulate(const Dataset& ds, Flag a, Flag b);

// Name-based variant; throws ValidationError for an unknown flag name.
CrossTab cross_tabulate(const Dataset& ds, std::string_view a,
                        std::string_view b);

std::string render_crosstab(const CrossTab& tab);

}  // namespace additivity
