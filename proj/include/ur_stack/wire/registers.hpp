#ifndef UR_STACK_WIRE_REGISTERS_HPP
#define UR_STACK_WIRE_REGISTERS_HPP

#include <array>
#include <cstdint>
#include <mutex>
#include <stdexcept>

namespace urstack::wire {

enum class RegisterBank { InputInt, InputFloat, OutputInt, OutputFloat };

constexpr int kRegisterCount = 24;

// By convention registers 18/19 are reserved for extension triggering and
// extension parameters; at this layer they behave like any other index.
constexpr int kExtensionTriggerRegister = 18;
constexpr int kExtensionParamRegister = 19;

class RegisterError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Shared input/output register banks plus digital IO bits. Zero-initialized.
// Individual get/set calls are atomic; no cross-register transactions.
class RegisterFile {
 public:
  std::int32_t get_int(RegisterBank bank, int index) const {
    check(index);
    std::lock_guard lk(mu_);
    return bank == RegisterBank::InputInt ? input_int_[index] : output_int_[index];
  }

  double get_float(RegisterBank bank, int index) const {
    check(index);
    std::lock_guard lk(mu_);
    return bank == RegisterBank::InputFloat ? input_float_[index] : output_float_[index];
  }

  void set_int(RegisterBank bank, int index, std::int32_t value) {
    check(index);
    std::lock_guard lk(mu_);
    (bank == RegisterBank::InputInt ? input_int_ : output_int_)[index] = value;
  }

  void set_float(RegisterBank bank, int index, double value) {
    check(index);
    std::lock_guard lk(mu_);
    (bank == RegisterBank::InputFloat ? input_float_ : output_float_)[index] = value;
  }

  std::uint64_t digital_out_bits() const {
    std::lock_guard lk(mu_);
    return digital_out_;
  }
  std::uint64_t digital_in_bits() const {
    std::lock_guard lk(mu_);
    return digital_in_;
  }
  void apply_digital_out(std::uint64_t mask, std::uint64_t value) {
    std::lock_guard lk(mu_);
    digital_out_ = (digital_out_ & ~mask) | (value & mask);
  }
  void set_digital_in_bits(std::uint64_t bits) {
    std::lock_guard lk(mu_);
    digital_in_ = bits;
  }

 private:
  static void check(int index) {
    if (index < 0 || index >= kRegisterCount)
      throw RegisterError("register index out of range: " + std::to_string(index));
  }

  mutable std::mutex mu_;
  std::array<std::int32_t, kRegisterCount> input_int_{};
  std::array<double, kRegisterCount> input_float_{};
  std::array<std::int32_t, kRegisterCount> output_int_{};
  std::array<double, kRegisterCount> output_float_{};
  std::uint64_t digital_out_ = 0;
  std::uint64_t digital_in_ = 0;
};

}  // namespace urstack::wire

#endif  // UR_STACK_WIRE_REGISTERS_HPP
