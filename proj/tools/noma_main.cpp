#include "noma/harness.hpp"

int main(int argc, char** argv) { return noma::harness::run_cli(argc, argv); }
