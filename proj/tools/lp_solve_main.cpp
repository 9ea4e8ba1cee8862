// Reference implementation of the external-solver contract used by the
// lp-file backend: read an LP file, solve it, write "name value" lines.
// Useful as a template when wiring a real solver behind CCEPEC_SOLVER_CMD.
#include <fstream>
#include <iostream>
#include <string>

#include "ccepec/results.hpp"
#include "ccepec/solver/lp_file.hpp"
#include "ccepec/solver/solve.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: " << argv[0] << " <program.lp> <solution.sol>\n";
    return 2;
  }
  try {
    ccepec::ConicProgram p = ccepec::parse_lp_file(argv[1]);
    ccepec::SolveResult res = ccepec::solve(p, {});
    if (!res.ok()) {
      std::cerr << "solve ended " << ccepec::to_string(res.status) << ": "
                << res.message << "\n";
      return 1;
    }
    std::ofstream out(argv[2], std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << argv[2] << "\n";
      return 2;
    }
    out << "# objective " << ccepec::format_double(res.objective) << "\n";
    for (int i = 0; i < p.num_vars(); ++i)
      out << p.vars[static_cast<std::size_t>(i)].name << " "
          << ccepec::format_double(res.x[static_cast<std::size_t>(i)]) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
