#include "riskbai/cli.hpp"

int main(int argc, char** argv) { return riskbai::run_cli(argc, argv); }
