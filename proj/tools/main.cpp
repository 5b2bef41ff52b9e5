#include "cbso/cli.hpp"

int main(int argc, char** argv) { return cbso::cli_main(argc, argv); }
