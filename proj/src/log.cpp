#include "gccakit/log.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace gccakit::log {

namespace {

Level parse_level() {
  const char* env = std::getenv("GCCAKIT_LOG");
  if (env == nullptr) return Level::Info;
  if (std::strcmp(env, "error") == 0) return Level::Error;
  if (std::strcmp(env, "debug") == 0) return Level::Debug;
  return Level::Info;
}

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

}  // namespace

Level level() {
  static const Level lvl = parse_level();
  return lvl;
}

void write(Level lvl, const std::string& msg) {
  const char* tag = lvl == Level::Error ? "error" : (lvl == Level::Info ? "info" : "debug");
  std::fprintf(stderr, "[gccakit %s] %s\n", tag, msg.c_str());
}

StageTimer::StageTimer(std::string stage) : stage_(std::move(stage)), start_ms_(now_ms()) {}

StageTimer::~StageTimer() {
  info(stage_, ": ", now_ms() - start_ms_, " ms");
}

}  // namespace gccakit::log
