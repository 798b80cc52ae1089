#include "softfin/cli.hpp"

int main(int argc, char** argv) { return softfin::cli_main(argc, argv); }
