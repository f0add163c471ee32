#include "dca/cli.hpp"

int main(int argc, char** argv) { return dca::run_cli(argc, argv); }
