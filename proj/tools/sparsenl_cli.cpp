#include <sparsenl/cli.hpp>

int main(int argc, char** argv) { return sparsenl::run_cli(argc, argv); }
