#include "qsdlab/errors.hpp"

namespace qsdlab {

void throw_input(const std::string& what) { throw InputError(what); }
void throw_config(const std::string& what) { throw ConfigError(what); }
void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace qsdlab
