#include "uscx/cli.hpp"

int main(int argc, char** argv) { return uscx::run_cli(argc, argv); }
