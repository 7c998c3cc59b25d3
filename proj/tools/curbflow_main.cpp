#include "curbflow/cli.hpp"

int main(int argc, char** argv) { return curbflow::run_cli(argc, argv); }
