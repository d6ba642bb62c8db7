#include "genrec/journal.hpp"

#include "genrec/errors.hpp"

namespace genrec {

std::string MemoryJournal::text() const {
  std::string out;
  for (const auto& line : lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

FileJournal::FileJournal(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) {
    throw Error(ErrorKind::config, "journal: cannot open '" + path + "' for writing");
  }
}

void FileJournal::append(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
}

std::vector<nlohmann::json> read_journal_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::parse, "journal: cannot open '" + path + "'");
  }
  std::vector<nlohmann::json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::parse, "journal: '" + path + "' line " +
                                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace genrec
