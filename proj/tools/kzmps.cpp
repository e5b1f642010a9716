#include "kzmps/cli.hpp"

int main(int argc, char** argv) { return kzmps::run_cli(argc, argv); }
