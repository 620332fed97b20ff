#include "feddlora/cli.hpp"

int main(int argc, char** argv) { return feddlora::cli_main(argc, argv); }
