#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace paretotune {

// Append-only writer for line-delimited JSON records.
class JournalWriter {
 public:
  enum class Mode { truncate, append };

  JournalWriter(const std::filesystem::path& path, Mode mode);
  ~JournalWriter();
  JournalWriter(JournalWriter&& other) noexcept;
  JournalWriter& operator=(JournalWriter&& other) noexcept;
  JournalWriter(const JournalWriter&) = delete;
  JournalWriter& operator=(const JournalWriter&) = delete;

  void append(const nlohmann::json& record);
  // Flushes buffered records and fsyncs the file.
  void sync();

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

// Every record of a journal. Throws JournalError naming the last valid record
// when a line is not a complete JSON object with a "type".
std::vector<nlohmann::json> read_journal(const std::filesystem::path& path);

}  // namespace paretotune
