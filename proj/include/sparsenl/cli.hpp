#pragma once

namespace sparsenl {

// Entry point of the command-line tool. Returns the process exit code:
// 0 success, 1 infeasible certificate, 2 I/O or validation error.
int run_cli(int argc, char** argv);

} // namespace sparsenl
