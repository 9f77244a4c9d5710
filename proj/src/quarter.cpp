#include "spatiocorr/quarter.hpp"

#include "spatiocorr/error.hpp"

#include <cctype>
#include <charconv>

namespace spatiocorr {

std::string Quarter::to_string() const {
    return std::to_string(year) + "Q" + std::to_string(quarter);
}

Quarter Quarter::parse(std::string_view text) {
    auto fail = [&] { return InvalidArgument("invalid quarter label '" + std::string(text) + "'"); };

    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

    std::size_t pos = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == 0 || pos > 5) throw fail();

    int year = 0;
    std::from_chars(text.data(), text.data() + pos, year);

    std::string_view rest = text.substr(pos);
    if (!rest.empty() && (rest.front() == '/' || rest.front() == '-' || rest.front() == ' ' || rest.front() == '.'))
        rest.remove_prefix(1);
    if (!rest.empty() && (rest.front() == 'Q' || rest.front() == 'q')) rest.remove_prefix(1);
    if (rest.size() != 1 || rest[0] < '1' || rest[0] > '4') throw fail();

    return Quarter{year, rest[0] - '0'};
}

} // namespace spatiocorr
