#pragma once

#include <iosfwd>
#include <string>

#include "dynsync/signal.hpp"

namespace dynsync {

// Columnar text format shared by signals and measurement stacks.
//   header:  n,T
//   rows:    k,i,j,re,im        (all indices 1-based)
// Measurement rows carry the strict upper triangle only (i < j); the lower
// triangle and the zero diagonal are restored on load. Signal rows use the
// sentinel j = 0 and one row per coordinate i. Doubles are written with 17
// significant digits, so a save/load round trip reproduces payload doubles
// bit for bit.

void save_signal(const StackedSignal& g, std::ostream& os);
void save_signal(const StackedSignal& g, const std::string& path);
StackedSignal load_signal(std::istream& is);
StackedSignal load_signal(const std::string& path);

void save_measurements(const MeasurementStack& A, std::ostream& os);
void save_measurements(const MeasurementStack& A, const std::string& path);
MeasurementStack load_measurements(std::istream& is);
MeasurementStack load_measurements(const std::string& path);

}  // namespace dynsync
