#include "opgap/cli.hpp"

int main(int argc, char** argv) { return opgap::cli::main_entry(argc, argv); }
