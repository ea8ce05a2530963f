"""Exact checks of the random coset code ensemble.

Over a tiny field and block length every generator matrix and dither can
be listed, so uniformity and independence claims are checked by counting
rather than sampling.  Two negative controls show the checks have teeth.
"""

from cosetmac.algebra import field_of_order
from cosetmac.codesim import (check_coset_independence, check_mac_coset_independence,
                              check_pairwise_independence)

F2, F3 = field_of_order(2), field_of_order(3)

for rep in (check_pairwise_independence(F2, 3, 1, 1),
            check_pairwise_independence(F3, 1, 1, 1),
            check_coset_independence(F2, 2, 1, 1),
            check_mac_coset_independence(F2, 2, 1, 1, 1, 1)):
    print(f"{'holds ' if rep.passed else 'BROKEN'}  {rep.name}  ({rep.cases} codes)")

# Without the dither the all-zero message always maps to the zero word.
rep = check_pairwise_independence(F2, 3, 1, 1, bias=False)
print(f"\nno dither: {'holds' if rep.passed else 'fails'}; {rep.detail.split(';')[0]}")

# Two codewords of the same coset differ by an inner-code word, so they are
# tied together; independence is only claimed across cosets.
rep = check_coset_independence(F2, 2, 1, 1, same_coset=True)
print(f"same coset: {'holds' if rep.passed else 'fails'}")
