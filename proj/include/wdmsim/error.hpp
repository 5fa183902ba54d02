// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace wdmsim {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter violates an operation precondition.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// A frequency shift or channel placement falls outside the sampled band.
class OutOfBandError : public InvalidArgument
{
public:
  using InvalidArgument::InvalidArgument;
};

/// The split-step integration could not proceed (coarse step, NaN/Inf).
class PropagationError : public Error
{
public:
  using Error::Error;
};

/// Too few samples for a statistically meaningful estimate.
class StatisticsError : public Error
{
public:
  using Error::Error;
};

/// Non-fatal diagnostics go through a replaceable sink (stderr by default).
using WarningSink = std::function<void(const std::string&)>;

void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

} // namespace wdmsim
