#pragma once

// Default word lists; byte-identical to data/stoplist.txt and data/lexicon.tsv.

#include <string_view>

namespace entrain::bundled {

inline constexpr std::string_view kStoplist = R"WORDS(a
about
after
again
against
all
almost
already
also
always
am
an
and
another
any
anyone
anything
are
around
as
at
be
because
been
before
being
below
between
both
but
by
can
could
did
do
does
doing
done
during
each
else
even
few
for
from
further
get
gets
got
had
has
have
having
he
her
here
hers
herself
him
himself
his
how
however
i
if
in
into
is
it
its
itself
just
last
let
lets
ll
made
many
may
me
might
mine
more
most
much
must
my
myself
never
next
no
none
nor
not
nothing
now
of
on
once
one
only
onto
or
other
others
our
ours
ourselves
own
please
quite
rather
re
really
s
same
seem
seems
she
should
since
so
some
someone
something
still
such
t
than
that
the
their
theirs
them
themselves
then
there
therefore
these
they
this
those
through
thus
to
together
too
until
us
ve
very
was
we
well
were
what
when
where
whether
which
while
who
whom
why
will
with
would
yet
you
your
yours
yourself
yourselves
looks
like
look
looking
kind
sort
kinda
sorta
okay
ok
um
uh
yeah
yes
)WORDS";

inline constexpr std::string_view kLexicon = R"WORDS(about	ADV
actually	ADV
again	ADV
airplane	N
alien	N
almost	ADV
also	ADV
although	CONJ
and	CONJ
angel	N
angry	N,ADJ
animal	N
arm	N
arms	N
arrow	N
baby	N
back	N
backwards	N,ADJ
bad	ADJ
bag	N
ball	N
ballerina	N
base	N
basically	ADV
basket	N
bat	N
beak	N
bear	N
beard	N
because	CONJ
bell	N
belly	N
bend	V
bending	V
bent	N,ADJ
big	N,ADJ
bird	N
birds	N
black	N,ADJ
block	N
boat	N
body	N
boot	N
bottom	N
bow	N,V
bowing	V
bowl	N
box	N
boxing	V
boy	N
bridge	N
broken	N,ADJ
bucket	N
bug	N
bunny	N
but	CONJ
butt	N
camel	N
candle	N
cane	N
cap	N
cape	N
car	N
carry	V
carrying	V
castle	N
cat	N
cats	N
center	N
chair	N
chest	N
chicken	N
child	N
chimney	N
chubby	N,ADJ
church	N
climb	V
climbing	V
closed	N,ADJ
clown	N
coat	N
cool	ADJ
corner	N
corners	N
cow	N
crab	N
crawl	V
crawling	V
crooked	N,ADJ
crouch	V
crouching	V
crown	N
cup	N
curved	N,ADJ
cute	ADJ
dance	V
dancer	N
dances	V
dancing	V
dark	N,ADJ
deer	N
diagonal	N
diamond	N
dinosaur	N
direction	N
diving	V
dog	N
dogs	N
door	N
double	N,ADJ
down	N,ADJ
dragon	N
dress	N
duck	N
ear	N
ears	N
easy	ADJ
edge	N
empty	N,ADJ
even	ADV
extra	N,ADJ
eye	N
eyes	N
face	N,V
facing	V
fall	V
falling	V
fan	N
fancy	N,ADJ
fat	N,ADJ
feet	N
fighting	V
figure	N
fin	N
fins	N
first	ADJ
fish	N
flag	N
flat	N,ADJ
flies	V
fly	V
flying	V
foot	N
forward	N,ADJ
forwards	N,ADJ
fox	N
frog	N
front	N
full	N,ADJ
funny	ADJ
ghost	N
giant	N,ADJ
giraffe	N
girl	N
goat	N
good	ADJ
goose	N
guy	N
haha	OTHER
hair	N
half	N,ADJ
hall	N
hand	N
hands	N
happy	N,ADJ
hard	ADJ
hat	N
head	N
heads	N
heavy	N,ADJ
hen	N
hey	OTHER
hi	OTHER
hill	N
hip	N
hips	N
hmm	OTHER
hold	V
holding	V
holds	V
home	N
hook	N
hop	V
hopping	V
horn	N
horns	N
horse	N
house	N
hug	V
huge	N,ADJ
hugging	V
image	N
inverted	N,ADJ
jump	V
jumping	V
jumps	V
just	ADV
key	N
kick	V
kicking	V
kid	N
kinda	ADV
king	N
kite	N
knee	N
kneel	V
kneeled	V
kneeling	V
kneels	V
knees	N
knight	N
ladder	N
lady	N
lamp	N
large	N,ADJ
last	ADJ
lean	V
leaning	V
leans	V
left	N
leg	N
legs	N
lie	V
lift	N,V
lifted	V
lifting	V
lifts	N
light	N,ADJ
line	N
lion	N
little	N,ADJ
lock	N
lol	OTHER
long	N,ADJ
look	V
lying	V
man	N
maybe	ADV
men	N
middle	N
monk	N
monster	N
moon	N
mountain	N
mouse	N
mouth	N
narrow	N,ADJ
neck	N
new	ADJ
next	ADJ
nice	ADJ
ninja	N
no	OTHER
nor	CONJ
nose	N
nun	N
ok	OTHER
okay	OTHER
old	N,ADJ
only	ADV
oops	OTHER
open	N,ADJ
or	CONJ
other	ADJ
owl	N
pan	N
pants	N
parallelogram	N
peek	V
peeking	V
pen	N
penguin	N
people	N
person	N
picture	N
piece	N
pieces	N
pig	N
pirate	N
plane	N
point	N,V
pointed	N,ADJ
pointing	V
pointy	N,ADJ
pot	N
pray	V
praying	V
pretty	ADV
previous	ADJ
priest	N
probably	ADV
pull	V
pulling	V
push	V
pushing	V
queen	N
quite	ADV
rabbit	N
raise	V
raised	V
raising	V
rat	N
rather	ADV
reach	V
reaching	V
rectangle	N
rectangular	N,ADJ
rest	V
resting	V
right	N
robe	N
robot	N
rocket	N
roof	N
round	N,ADJ
rowing	V
run	V
runner	N
running	V
runs	V
sad	N,ADJ
sail	N
sailing	V
same	ADJ
scarf	N
second	ADJ
shape	N
shapes	N
shark	N
sharp	N,ADJ
sheep	N
ship	N
shirt	N
shoe	N
short	N,ADJ
shoulder	N
shoulders	N
side	N
sides	N
sideways	N,ADJ
single	N,ADJ
sit	V
sits	V
sitting	V
skate	V
skater	N
skating	V
ski	V
skier	N
skiing	V
skinny	N,ADJ
skirt	N
slanted	N,ADJ
sleep	V
sleeping	V
slide	V
sliding	V
slightly	ADV
small	N,ADJ
snake	N
sock	N
soldier	N
somewhat	ADV
sorry	OTHER
sorta	ADV
square	N,ADJ
squat	V
squatting	V
staff	N
stairs	N
stand	V
standing	V
stands	V
star	N
steps	N
stick	N
still	ADV
straight	N,ADJ
strange	ADJ
stretch	V
stretching	V
sun	N
swan	N
swim	V
swimming	V
sword	N
table	N
tail	N
tails	N
tall	N,ADJ
temple	N
thanks	OTHER
thin	N,ADJ
third	ADJ
throw	V
throwing	V
tie	N
tiger	N
tilt	N,V
tilted	N,V,ADJ
tilting	N,V
tilts	N,V
tiny	N,ADJ
tip	N
top	N
tower	N
train	N
tree	N
triangle	N
triangular	N,ADJ
truck	N
turn	V
turned	V
turning	V
turtle	N
uh	OTHER
um	OTHER
umbrella	N
up	N,ADJ
upright	N,ADJ
upside	N,ADJ
vase	N
wait	OTHER
walk	V
walking	V
walks	V
wall	N
wave	V
waving	V
weird	ADJ
well	OTHER
whale	N
while	CONJ
white	N,ADJ
wide	N,ADJ
window	N
wing	N
wings	N
witch	N
wizard	N
wolf	N
woman	N
women	N
yeah	OTHER
yes	OTHER
yoga	V
young	N,ADJ
zombie	N
)WORDS";

}  // namespace entrain::bundled
