#ifndef OSCLAIMS_DETAIL_OVERLOADED_HPP
#define OSCLAIMS_DETAIL_OVERLOADED_HPP

namespace osclaims::detail {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace osclaims::detail

#endif
