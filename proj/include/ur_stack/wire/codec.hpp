#ifndef UR_STACK_WIRE_CODEC_HPP
#define UR_STACK_WIRE_CODEC_HPP

#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace urstack::wire {

// Framed message types of the register-exchange link.
enum class PacketType : std::uint8_t {
  ProtocolVersion = 0x56,  // 'V'
  SetupOutputs = 0x4F,     // 'O'
  SetupInputs = 0x49,      // 'I'
  Start = 0x53,            // 'S'
  Pause = 0x50,            // 'P'
  DataPackage = 0x55,      // 'U'
  ControlScript = 0x43,    // 'C' (control-script upload, control connection only)
};

inline bool is_known_packet_type(std::uint8_t code) {
  switch (static_cast<PacketType>(code)) {
    case PacketType::ProtocolVersion:
    case PacketType::SetupOutputs:
    case PacketType::SetupInputs:
    case PacketType::Start:
    case PacketType::Pause:
    case PacketType::DataPackage:
    case PacketType::ControlScript:
      return true;
  }
  return false;
}

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldKind { Double, Int32, Uint32, Uint64, Bool, Vector6d };

inline std::size_t field_width(FieldKind k) {
  switch (k) {
    case FieldKind::Double: return 8;
    case FieldKind::Int32: return 4;
    case FieldKind::Uint32: return 4;
    case FieldKind::Uint64: return 8;
    case FieldKind::Bool: return 1;
    case FieldKind::Vector6d: return 48;
  }
  throw ProtocolError("invalid field kind");
}

inline const char* field_kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::Double: return "DOUBLE";
    case FieldKind::Int32: return "INT32";
    case FieldKind::Uint32: return "UINT32";
    case FieldKind::Uint64: return "UINT64";
    case FieldKind::Bool: return "BOOL";
    case FieldKind::Vector6d: return "VECTOR6D";
  }
  return "?";
}

inline std::optional<FieldKind> field_kind_from_name(const std::string& s) {
  if (s == "DOUBLE") return FieldKind::Double;
  if (s == "INT32") return FieldKind::Int32;
  if (s == "UINT32") return FieldKind::Uint32;
  if (s == "UINT64") return FieldKind::Uint64;
  if (s == "BOOL") return FieldKind::Bool;
  if (s == "VECTOR6D") return FieldKind::Vector6d;
  return std::nullopt;
}

struct FieldSpec {
  std::string name;
  FieldKind kind;
};

// Named-field schema negotiated per connection; fixes data-package layout.
struct Recipe {
  std::uint8_t id = 0;
  std::vector<FieldSpec> fields;
  double frequency = 0.0;  // output recipes only

  std::size_t payload_width() const {
    std::size_t w = 1;  // recipe id byte
    for (const auto& f : fields) w += field_width(f.kind);
    return w;
  }
};

// One field value. Vector6d carried as 6 doubles.
using Value = std::variant<double, std::int32_t, std::uint32_t, std::uint64_t, bool,
                           std::array<double, 6>>;

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(Bytes& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

struct Reader {
  const std::uint8_t* p;
  std::size_t n;
  std::size_t pos = 0;

  void need(std::size_t k) const {
    if (pos + k > n) throw ProtocolError("short buffer while unpacking values");
  }
  std::uint8_t u8() { need(1); return p[pos++]; }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = (std::uint16_t(p[pos]) << 8) | p[pos + 1];
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | p[pos + i];
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[pos + i];
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
};

}  // namespace detail

constexpr std::size_t kMaxPayload = 65532;

// Frame layout: u16 total size (3 + payload) | type code | payload.
inline Bytes encode_frame(PacketType type, const Bytes& payload) {
  if (payload.size() > kMaxPayload) throw ProtocolError("payload too large");
  Bytes out;
  out.reserve(3 + payload.size());
  detail::put_u16(out, static_cast<std::uint16_t>(3 + payload.size()));
  out.push_back(static_cast<std::uint8_t>(type));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

struct Frame {
  PacketType type;
  Bytes payload;
};

struct DecodeResult {
  std::vector<Frame> frames;
  Bytes remainder;
};

// Greedy extraction of complete frames; a trailing partial frame stays in
// the remainder. Unknown type codes and undersized declared lengths throw.
inline DecodeResult decode_frames(const Bytes& buffer) {
  DecodeResult r;
  std::size_t pos = 0;
  while (buffer.size() - pos >= 3) {
    std::uint16_t size = (std::uint16_t(buffer[pos]) << 8) | buffer[pos + 1];
    if (size < 3) throw ProtocolError("declared frame size below header size");
    std::uint8_t code = buffer[pos + 2];
    if (!is_known_packet_type(code)) {
      std::ostringstream os;
      os << "unknown packet type 0x" << std::hex << int(code);
      throw ProtocolError(os.str());
    }
    if (buffer.size() - pos < size) break;  // partial frame
    Frame f;
    f.type = static_cast<PacketType>(code);
    f.payload.assign(buffer.begin() + pos + 3, buffer.begin() + pos + size);
    r.frames.push_back(std::move(f));
    pos += size;
  }
  r.remainder.assign(buffer.begin() + pos, buffer.end());
  return r;
}

// ---------------------------------------------------------------------------
// Standard field dictionaries

inline const std::map<std::string, FieldKind>& standard_output_fields() {
  static const std::map<std::string, FieldKind> dict = [] {
    std::map<std::string, FieldKind> d;
    d["timestamp"] = FieldKind::Double;
    d["actual_q"] = FieldKind::Vector6d;
    d["actual_qd"] = FieldKind::Vector6d;
    d["actual_TCP_pose"] = FieldKind::Vector6d;
    d["actual_TCP_force"] = FieldKind::Vector6d;
    d["actual_digital_input_bits"] = FieldKind::Uint64;
    d["actual_digital_output_bits"] = FieldKind::Uint64;
    for (int k = 0; k < 24; ++k) {
      d["output_int_register_" + std::to_string(k)] = FieldKind::Int32;
      d["output_double_register_" + std::to_string(k)] = FieldKind::Double;
    }
    return d;
  }();
  return dict;
}

inline const std::map<std::string, FieldKind>& standard_input_fields() {
  static const std::map<std::string, FieldKind> dict = [] {
    std::map<std::string, FieldKind> d;
    d["standard_digital_output_mask"] = FieldKind::Uint64;
    d["standard_digital_output"] = FieldKind::Uint64;
    for (int k = 0; k < 24; ++k) {
      d["input_int_register_" + std::to_string(k)] = FieldKind::Int32;
      d["input_double_register_" + std::to_string(k)] = FieldKind::Double;
    }
    return d;
  }();
  return dict;
}

// Allocates recipe ids sequentially from 1; id 0 stays invalid.
class RecipeBuilder {
 public:
  Recipe output(const std::vector<std::string>& names, double frequency) {
    if (names.empty()) throw ProtocolError("empty recipe");
    if (!(frequency >= 1.0 && frequency <= 500.0))
      throw ProtocolError("output frequency out of range [1, 500]");
    Recipe r;
    r.frequency = frequency;
    for (const auto& n : names) {
      auto it = standard_output_fields().find(n);
      if (it == standard_output_fields().end())
        throw ProtocolError("unknown output field: " + n);
      r.fields.push_back({n, it->second});
    }
    r.id = next_id();
    return r;
  }

  Recipe input(const std::vector<std::string>& names) {
    if (names.empty()) throw ProtocolError("empty recipe");
    Recipe r;
    for (const auto& n : names) {
      auto it = standard_input_fields().find(n);
      if (it == standard_input_fields().end())
        throw ProtocolError("unknown input field: " + n);
      r.fields.push_back({n, it->second});
    }
    r.id = next_id();
    return r;
  }

 private:
  std::uint8_t next_id() {
    if (next_ > 255) throw ProtocolError("recipe id space exhausted");
    return static_cast<std::uint8_t>(next_++);
  }
  int next_ = 1;
};

// ---------------------------------------------------------------------------
// Value packing

inline Bytes pack_values(const Recipe& recipe, const std::vector<Value>& values) {
  if (values.size() != recipe.fields.size())
    throw ProtocolError("value count does not match recipe");
  Bytes out;
  out.reserve(recipe.payload_width());
  out.push_back(recipe.id);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& v = values[i];
    switch (recipe.fields[i].kind) {
      case FieldKind::Double:
        if (!std::holds_alternative<double>(v)) throw ProtocolError("kind mismatch: expected DOUBLE");
        detail::put_f64(out, std::get<double>(v));
        break;
      case FieldKind::Int32:
        if (!std::holds_alternative<std::int32_t>(v)) throw ProtocolError("kind mismatch: expected INT32");
        detail::put_u32(out, static_cast<std::uint32_t>(std::get<std::int32_t>(v)));
        break;
      case FieldKind::Uint32:
        if (!std::holds_alternative<std::uint32_t>(v)) throw ProtocolError("kind mismatch: expected UINT32");
        detail::put_u32(out, std::get<std::uint32_t>(v));
        break;
      case FieldKind::Uint64:
        if (!std::holds_alternative<std::uint64_t>(v)) throw ProtocolError("kind mismatch: expected UINT64");
        detail::put_u64(out, std::get<std::uint64_t>(v));
        break;
      case FieldKind::Bool:
        if (!std::holds_alternative<bool>(v)) throw ProtocolError("kind mismatch: expected BOOL");
        out.push_back(std::get<bool>(v) ? 1 : 0);
        break;
      case FieldKind::Vector6d: {
        if (!std::holds_alternative<std::array<double, 6>>(v))
          throw ProtocolError("kind mismatch: expected VECTOR6D");
        for (double d : std::get<std::array<double, 6>>(v)) detail::put_f64(out, d);
        break;
      }
    }
  }
  return out;
}

inline std::vector<Value> unpack_values(const Recipe& recipe, const Bytes& payload) {
  detail::Reader rd{payload.data(), payload.size()};
  std::uint8_t id = rd.u8();
  if (id != recipe.id) throw ProtocolError("payload recipe id mismatch");
  std::vector<Value> out;
  out.reserve(recipe.fields.size());
  for (const auto& f : recipe.fields) {
    switch (f.kind) {
      case FieldKind::Double: out.emplace_back(rd.f64()); break;
      case FieldKind::Int32: out.emplace_back(static_cast<std::int32_t>(rd.u32())); break;
      case FieldKind::Uint32: out.emplace_back(rd.u32()); break;
      case FieldKind::Uint64: out.emplace_back(rd.u64()); break;
      case FieldKind::Bool: out.emplace_back(rd.u8() != 0); break;
      case FieldKind::Vector6d: {
        std::array<double, 6> v;
        for (double& d : v) d = rd.f64();
        out.emplace_back(v);
        break;
      }
    }
  }
  if (rd.pos != payload.size()) throw ProtocolError("trailing bytes after recipe payload");
  return out;
}

}  // namespace urstack::wire

#endif  // UR_STACK_WIRE_CODEC_HPP
