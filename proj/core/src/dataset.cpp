#include "additivity/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "additivity/errors.hpp"

namespace additivity {

namespace {

constexpr std::array<std::string_view, 9> kFlagNames = {
    "B", "C", "T", "VB", "VT", "VC", "AVB", "AVT", "AVC"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

bool is_id_header(std::string_view cell) {
  std::string l = lower(trim(cell));
  return l == "id" || l == "story_id" || l == "story";
}

}  // namespace

std::string_view flag_name(Flag f) { return kFlagNames[static_cast<int>(f)]; }

std::optional<Flag> flag_from_name(std::string_view name) {
  std::string l = lower(trim(name));
  for (Flag f : kAllFlags) {
    if (l == lower(flag_name(f))) return f;
  }
  return std::nullopt;
}

void StoryRecord::set_flag(Flag f, int value) {
  if (value != 0 && value != 1) {
    throw ValidationError("flag " + std::string(flag_name(f)) +
                          " must be 0 or 1, got " + std::to_string(value));
  }
  flags[static_cast<int>(f)] = static_cast<std::uint8_t>(value);
}

Dataset::Dataset(std::vector<StoryRecord> records)
    : records_(std::move(records)) {
  if (records_.empty()) {
    throw ValidationError("dataset is empty: at least one record is required");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].story_id.empty()) {
      throw ValidationError("record " + std::to_string(i + 1) +
                            " has an empty story_id");
    }
    for (Flag f : kAllFlags) {
      int v = records_[i].flag(f);
      if (v != 0 && v != 1) {
        throw ValidationError("record " + std::to_string(i + 1) + " flag " +
                              std::string(flag_name(f)) + " is non-binary");
      }
    }
  }
}

std::vector<int> Dataset::column(Flag f) const {
  std::vector<int> col;
  col.reserve(records_.size());
  for (const auto& r : records_) col.push_back(r.flag(f));
  return col;
}

Dataset load_dataset(const std::filesystem::path& path,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset file: " + path.string());
  }
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  // Strip a UTF-8 BOM if present.
  if (content.size() >= 3 && content[0] == '\xEF' && content[1] == '\xBB' &&
      content[2] == '\xBF') {
    content.erase(0, 3);
  }

  std::vector<std::string> lines;
  {
    std::istringstream ss(content);
    std::string line;
    while (std::getline(ss, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) {
    throw ValidationError("empty dataset: file has no header or data rows: " +
                          path.string());
  }

  const char delim =
      lines[0].find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> header = split(lines[0], delim);

  // Map each flag to its column index; remember the id column if any.
  std::array<int, 9> flag_col;
  flag_col.fill(-1);
  int id_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string_view cell = trim(header[c]);
    if (auto f = flag_from_name(cell)) {
      if (flag_col[static_cast<int>(*f)] >= 0) {
        throw SchemaError("duplicate column " +
                          std::string(flag_name(*f)) + " in " +
                          path.string());
      }
      flag_col[static_cast<int>(*f)] = static_cast<int>(c);
    } else if (is_id_header(cell) && id_col < 0) {
      id_col = static_cast<int>(c);
    } else if (warnings) {
      warnings->push_back("ignoring column '" + std::string(cell) + "'");
    }
  }
  for (Flag f : kAllFlags) {
    if (flag_col[static_cast<int>(f)] < 0) {
      throw SchemaError("missing column " + std::string(flag_name(f)) +
                        " in " + path.string());
    }
  }

  std::vector<StoryRecord> records;
  int data_row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    ++data_row;
    std::vector<std::string> cells = split(lines[li], delim);
    if (cells.size() != header.size()) {
      throw ValidationError(
          "row " + std::to_string(data_row) + ": expected " +
          std::to_string(header.size()) + " cells, got " +
          std::to_string(cells.size()));
    }
    StoryRecord rec;
    if (id_col >= 0) {
      rec.story_id = std::string(trim(cells[id_col]));
      if (rec.story_id.empty()) {
        throw ValidationError("row " + std::to_string(data_row) +
                              ": empty story id");
      }
    } else {
      rec.story_id = "row_" + std::to_string(data_row);
    }
    for (Flag f : kAllFlags) {
      std::string_view cell = trim(cells[flag_col[static_cast<int>(f)]]);
      if (cell == "0") {
        rec.flags[static_cast<int>(f)] = 0;
      } else if (cell == "1") {
        rec.flags[static_cast<int>(f)] = 1;
      } else {
        throw ValidationError("row " + std::to_string(data_row) +
                              ", column " + std::string(flag_name(f)) +
                              ": non-binary value '" + std::string(cell) +
                              "'");
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    throw ValidationError("empty dataset: no data rows in " + path.string());
  }
  return Dataset(std::move(records));
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << "story_id";
  for (Flag f : kAllFlags) out << ',' << flag_name(f);
  out << '\n';
  for (const auto& r : ds.records()) {
    if (r.story_id.find_first_of(",\t\r\n") != std::string::npos) {
      throw ValidationError("cannot write story_id containing a delimiter: '" +
                            r.story_id + "'");
    }
    out << r.story_id;
    for (Flag f : kAllFlags) out << ',' << r.flag(f);
    out << '\n';
  }
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

CrossTab cross_tabulate(const Dataset& ds, Flag a, Flag b) {
  CrossTab tab;
  tab.a = a;
  tab.b = b;
  for (const auto& r : ds.records()) {
    tab.counts[r.flag(a)][r.flag(b)] += 1;
  }
  return tab;
}

CrossTab cross_tabulate(const Dataset& ds, std::string_view a,
                        std::string_view b) {
  auto fa = flag_from_name(a);
  if (!fa) throw ValidationError("unknown flag name '" + std::string(a) + "'");
  auto fb = flag_from_name(b);
  if (!fb) throw ValidationError("unknown flag name '" + std::string(b) + "'");
  return cross_tabulate(ds, *fa, *fb);
}

std::string render_crosstab(const CrossTab& tab) {
  std::ostringstream out;
  std::string an(flag_name(tab.a)), bn(flag_name(tab.b));
  out << an << "\\" << bn << "\t0\t1\n";
  for (int va = 0; va <= 1; ++va) {
    out << va << '\t' << tab.at(va, 0) << '\t' << tab.at(va, 1) << '\n';
  }
  return out.str();
}

}  // namespace additivity
