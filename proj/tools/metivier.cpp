#include <iostream>

#include "metivier_app.hpp"

int main(int argc, char** argv) { return metivier::app::run(argc, argv, std::cout, std::cerr); }
