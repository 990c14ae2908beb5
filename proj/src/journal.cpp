#include "paretotune/journal.hpp"

#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "paretotune/error.hpp"

namespace paretotune {

JournalWriter::JournalWriter(const std::filesystem::path& path, Mode mode) : path_(path) {
  file_ = std::fopen(path.c_str(), mode == Mode::truncate ? "wb" : "ab");
  if (!file_) throw UsageError("cannot open journal '" + path.string() + "': " + std::strerror(errno));
}

JournalWriter::~JournalWriter() {
  if (file_) {
    sync();
    std::fclose(file_);
  }
}

JournalWriter::JournalWriter(JournalWriter&& other) noexcept
    : path_(std::move(other.path_)), file_(std::exchange(other.file_, nullptr)) {}

JournalWriter& JournalWriter::operator=(JournalWriter&& other) noexcept {
  if (this != &other) {
    if (file_) std::fclose(file_);
    path_ = std::move(other.path_);
    file_ = std::exchange(other.file_, nullptr);
  }
  return *this;
}

void JournalWriter::append(const nlohmann::json& record) {
  const std::string line = record.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size())
    throw std::runtime_error("short write to journal '" + path_.string() + "'");
}

void JournalWriter::sync() {
  std::fflush(file_);
  ::fsync(::fileno(file_));
}

std::vector<nlohmann::json> read_journal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JournalError("cannot open journal '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  std::vector<nlohmann::json> records;
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "journal '" << path.string() << "': record " << records.size() + 1 << " " << why << "; last valid record is ";
    if (records.empty())
      os << "none";
    else
      os << records.size() << " (" << records.back().value("type", "?") << ")";
    throw JournalError(os.str());
  };

  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) fail("is truncated (no line terminator)");
    const std::string_view line(text.data() + start, nl - start);
    start = nl + 1;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail("is not valid JSON");
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) fail("has no record type");
    records.push_back(std::move(j));
  }
  return records;
}

}  // namespace paretotune
