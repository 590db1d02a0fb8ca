#include "fragchoice/cli.hpp"

int main(int argc, char** argv) { return fragchoice::cli::run(argc, argv); }
