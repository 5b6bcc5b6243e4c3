#include "sdestab/harness.hpp"

int main(int argc, char** argv) { return sdestab::run_cli(argc, argv); }
