#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hda {

using WarningHandler = std::function<void(std::string_view)>;

/// Emits a warning through the installed handler (stderr by default).
void warn(std::string_view message);

/// Replaces the process-wide warning handler; returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

/// Collects warnings for the lifetime of the object, then restores the
/// previous handler.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(std::string_view needle) const;

 private:
  WarningHandler previous_;
  std::vector<std::string> messages_;
};

}  // namespace hda
