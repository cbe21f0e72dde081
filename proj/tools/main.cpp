#include "baitradar/cli.hpp"

int main(int argc, char** argv) { return baitradar::cli_main(argc, argv); }
