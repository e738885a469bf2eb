#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace objattn::exp {

/// Entry point of the objattn command line tool. Returns the process exit
/// code; diagnostics go to `err`, tables and summaries to `out`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace objattn::exp
