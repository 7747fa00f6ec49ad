#include "bimp/cli.hpp"

int main(int argc, char** argv) { return bimp::cli_main(argc, argv); }
