#include "spdelab/error.hpp"

#include <sstream>

namespace spdelab {

namespace {
std::string blowup_message(double time, double sup_norm) {
  std::ostringstream os;
  os << "trajectory blew up at t = " << time << " (sup norm " << sup_norm << ")";
  return os.str();
}
}  // namespace

BlowUpError::BlowUpError(double time, double sup_norm)
    : std::runtime_error(blowup_message(time, sup_norm)), time_(time), sup_norm_(sup_norm) {}

}  // namespace spdelab
