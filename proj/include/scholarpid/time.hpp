#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <stdexcept>
#include <string>

namespace scholarpid {

// UTC instant with millisecond precision, rendered as ISO-8601
// ("2024-01-01T12:34:56.789Z").
class Timestamp {
 public:
  Timestamp() = default;
  explicit Timestamp(std::int64_t millis) : millis_(millis) {}

  static Timestamp from_iso(const std::string& text);

  std::int64_t millis() const { return millis_; }
  std::string to_iso() const;

  auto operator<=>(const Timestamp&) const = default;

 private:
  std::int64_t millis_ = 0;
};

inline std::string Timestamp::to_iso() const {
  std::time_t secs = static_cast<std::time_t>(millis_ / 1000);
  int ms = static_cast<int>(millis_ % 1000);
  if (ms < 0) {
    ms += 1000;
    --secs;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, ms);
  return buf;
}

inline Timestamp Timestamp::from_iso(const std::string& text) {
  std::tm tm{};
  int ms = 0;
  char zone = '\0';
  int matched = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c",
                            &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                            &tm.tm_min, &tm.tm_sec, &ms, &zone);
  if (matched == 8 && zone == 'Z') {
    // full form with millis
  } else {
    ms = 0;
    matched = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c",
                          &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                          &tm.tm_min, &tm.tm_sec, &zone);
    if (matched != 7 || zone != 'Z') {
      throw std::invalid_argument("not an ISO-8601 UTC timestamp: " + text);
    }
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  std::time_t secs = timegm(&tm);
  return Timestamp(static_cast<std::int64_t>(secs) * 1000 + ms);
}

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override {
    using namespace std::chrono;
    return Timestamp(
        duration_cast<milliseconds>(system_clock::now().time_since_epoch())
            .count());
  }
};

// Deterministic clock for tests. Each now() advances by a fixed step so
// event ordering stays strict without wall-clock sleeps.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_millis = 1704067200000,  // 2024-01-01
                       std::int64_t step_millis = 1000)
      : next_(start_millis), step_(step_millis) {}

  Timestamp now() const override {
    Timestamp t{next_};
    next_ += step_;
    return t;
  }

  void set(std::int64_t millis) { next_ = millis; }

 private:
  mutable std::int64_t next_;
  std::int64_t step_;
};

}  // namespace scholarpid
