#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>

#include "opser/types.hpp"

namespace opser {

/// Formats a double so it round-trips exactly through parsing.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Line-per-event machine-parsable trace. Lines are written in dispatch
/// order, so timestamps are nondecreasing; a run with a fixed seed produces
/// a byte-identical stream.
///
/// Line grammar:  <t_us> <node> <event> [key=value]...
class TraceWriter {
 public:
  TraceWriter() = default;
  explicit TraceWriter(std::ostream* out) : out_(out) {}

  bool enabled() const { return out_ != nullptr; }

  class Line {
   public:
    Line(TraceWriter* w, SimTime t, NodeId node, const char* event) : w_(w) {
      if (!w_ || !w_->enabled()) return;
      buf_.reserve(96);
      buf_ += std::to_string(t.us);
      buf_ += ' ';
      buf_ += std::to_string(node);
      buf_ += ' ';
      buf_ += event;
    }
    Line& field(const char* key, std::uint64_t v) { return raw(key, std::to_string(v)); }
    Line& field(const char* key, std::int64_t v) { return raw(key, std::to_string(v)); }
    Line& field(const char* key, int v) { return raw(key, std::to_string(v)); }
    Line& field(const char* key, NodeId v) { return raw(key, std::to_string(v)); }
    Line& field(const char* key, double v) { return raw(key, fmt_double(v)); }
    Line& field(const char* key, const char* v) { return raw(key, v); }
    Line& field(const char* key, const std::string& v) { return raw(key, v); }
    ~Line() {
      if (w_ && w_->enabled()) {
        buf_ += '\n';
        *w_->out_ << buf_;
      }
    }

   private:
    Line& raw(const char* key, const std::string& v) {
      if (w_ && w_->enabled()) {
        buf_ += ' ';
        buf_ += key;
        buf_ += '=';
        buf_ += v;
      }
      return *this;
    }
    TraceWriter* w_;
    std::string buf_;
  };

  Line line(SimTime t, NodeId node, const char* event) { return Line(this, t, node, event); }

 private:
  std::ostream* out_ = nullptr;
};

}  // namespace opser
