#include <iostream>

#include "vocalrestore/cli.h"

int main(int argc, char** argv) { return vr::cli::run(argc, argv, std::cout, std::cerr); }
