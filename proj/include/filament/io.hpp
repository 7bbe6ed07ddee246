#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "filament/vec3.hpp"

namespace filament {

// %.17g, the serialization used in every CSV and JSON artifact.
std::string format_double(double v);

// Minimal streaming JSON writer with caller-controlled field order.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);

  JsonWriter& value(double v);
  JsonWriter& value(long long v);
  JsonWriter& value(int v) { return value(static_cast<long long>(v)); }
  JsonWriter& value(std::size_t v) { return value(static_cast<long long>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& value(const Vec3& v);
  JsonWriter& value(const std::vector<double>& v);

  template <class T>
  JsonWriter& field(std::string_view k, const T& v) {
    key(k);
    return value(v);
  }

  const std::string& str() const { return out_; }

 private:
  void separator();

  std::string out_;
  std::vector<bool> first_;  // per open container: no element written yet
  bool after_key_ = false;
};

void write_text_file(const std::string& path, std::string_view content);

// FNV-1a, used to name artifact directories after their configuration.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace filament
