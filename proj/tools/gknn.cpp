#include "gknn/cli.hpp"

int main(int argc, char** argv) { return gknn::cli::run(argc, argv); }
