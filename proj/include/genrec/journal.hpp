#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace genrec {

/// Append-only sink for run records, one JSON object per line. Records never
/// carry wall-clock data: two runs of the same offline config must produce
/// byte-identical logs.
class Journal {
 public:
  virtual ~Journal() = default;
  virtual void append(const nlohmann::json& record) = 0;
};

class NullJournal : public Journal {
 public:
  void append(const nlohmann::json&) override {}
};

class MemoryJournal : public Journal {
 public:
  void append(const nlohmann::json& record) override {
    lines_.push_back(record.dump());
  }

  const std::vector<std::string>& lines() const { return lines_; }
  std::string text() const;

 private:
  std::vector<std::string> lines_;
};

class FileJournal : public Journal {
 public:
  explicit FileJournal(const std::string& path);
  void append(const nlohmann::json& record) override;

 private:
  std::ofstream out_;
};

/// Parses a line-delimited journal/transcript file into JSON records.
std::vector<nlohmann::json> read_journal_lines(const std::string& path);

}  // namespace genrec
