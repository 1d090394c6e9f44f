#include "igpr/cli.hpp"

int main(int argc, char** argv) { return igpr::cli_main(argc, argv); }
