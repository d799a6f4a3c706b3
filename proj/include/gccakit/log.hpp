#pragma once

#include <sstream>
#include <string>

namespace gccakit::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

/// Active level, read once from the GCCAKIT_LOG environment variable
/// (error | info | debug, default info).
Level level();

void write(Level lvl, const std::string& msg);

template <typename... Args>
void error(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << args);
  write(Level::Error, oss.str());
}

template <typename... Args>
void info(Args&&... args) {
  if (level() < Level::Info) return;
  std::ostringstream oss;
  (oss << ... << args);
  write(Level::Info, oss.str());
}

template <typename... Args>
void debug(Args&&... args) {
  if (level() < Level::Debug) return;
  std::ostringstream oss;
  (oss << ... << args);
  write(Level::Debug, oss.str());
}

/// RAII wall-clock timer that logs "<stage>: <ms> ms" at info level.
class StageTimer {
 public:
  explicit StageTimer(std::string stage);
  ~StageTimer();

  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::string stage_;
  double start_ms_;
};

}  // namespace gccakit::log
