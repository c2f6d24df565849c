#include "photonas/cli.hpp"

int main(int argc, char** argv) { return photonas::cli_main(argc, argv); }
