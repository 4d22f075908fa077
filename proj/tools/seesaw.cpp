#include "seesaw/cli.hpp"

int main(int argc, char** argv) { return seesaw::cli::dispatch(argc, argv); }
