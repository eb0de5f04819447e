#include "cli.hpp"

int main(int argc, char** argv) { return gaugerl::cli_main(argc, argv); }
