#include <CLI11.hpp>

#include "campo/io/serialize.hpp"

int main(int argc, char** argv) {
    CLI::App app{"campo: stochastic continuous-space planner"};
    app.require_subcommand(1);
    CLI11_PARSE(app, argc, argv);
    return 0;
}
