"""Embedded rank-1 lattice generating vector.

First 1024 components of the lattice-33002-1024-1048576.9125 vector from
F. Y. Kuo's table of lattice rules (Cools, Kuo and Nuyens, SIAM J. Sci.
Comput. 28, 2006), built by component-by-component search for order-2
weights and extensible in N = 2^m up to 2^20 points.
"""

MAX_LOG2_POINTS = 20

GENERATING_VECTOR = (
    1, 182667, 213731, 255351, 96013, 116671, 479315, 424089, 271103, 464421,
    124483, 230887, 392877, 162965, 109125, 168491, 216103, 5613, 207895, 506745,
    189519, 114879, 133967, 374257, 254597, 502087, 298245, 191333, 242099, 285991,
    397887, 507051, 511437, 129779, 406987, 345291, 225123, 511175, 432153, 306191,
    116577, 809, 370175, 402615, 485791, 201053, 366959, 54087, 395609, 211615,
    68543, 443345, 327293, 290819, 278623, 362043, 236117, 11091, 216837, 31545,
    325799, 503877, 410523, 88371, 240077, 423807, 479855, 330835, 134517, 329989,
    473381, 59205, 337775, 355995, 372243, 279827, 367217, 277741, 267077, 417971,
    152599, 184949, 511773, 397077, 520041, 98063, 52983, 91233, 363069, 23829,
    424377, 225285, 171171, 496765, 352791, 223231, 253273, 296195, 273379, 407265,
    305849, 215121, 489851, 245893, 397947, 174723, 329797, 213325, 357759, 346031,
    131433, 110731, 487615, 371877, 330799, 124595, 48775, 273275, 405083, 436731,
    465257, 158265, 82033, 67805, 203565, 190785, 351165, 19555, 210139, 236211,
    197333, 217457, 437623, 304987, 461169, 470529, 457011, 91823, 40575, 513857,
    238575, 149779, 163017, 355521, 438395, 429151, 510607, 252661, 255753, 219989,
    146583, 138783, 262887, 22765, 313675, 329005, 198699, 239305, 416211, 305549,
    185961, 343313, 485961, 333207, 400975, 334381, 317357, 270221, 175403, 179303,
    341251, 11983, 497027, 145741, 431637, 27489, 460319, 288665, 178737, 120329,
    99851, 97789, 446355, 398323, 320921, 399735, 301009, 58221, 20499, 496019,
    201021, 18141, 401811, 7615, 13797, 56685, 35433, 143763, 221013, 111635,
    398843, 450531, 503423, 37261, 130555, 159743, 114359, 283841, 168217, 148271,
    69501, 450607, 283473, 13641, 443385, 338995, 8113, 30043, 442875, 502897,
    336337, 110527, 514381, 200349, 27787, 38955, 214547, 231515, 315083, 458703,
    136455, 23359, 247081, 448209, 421023, 417125, 314287, 335073, 315409, 131405,
    495049, 459151, 444599, 458887, 36639, 512851, 431191, 257755, 336191, 80771,
    209571, 201763, 476611, 66875, 216789, 426571, 477141, 57497, 346643, 312477,
    195855, 283913, 134259, 78007, 206851, 367259, 297197, 90095, 58027, 222687,
    186773, 376291, 266565, 363313, 98609, 5093, 46873, 456783, 466755, 490973,
    141089, 63909, 470491, 143957, 522397, 185037, 338677, 119827, 200753, 221811,
    286559, 19683, 27881, 220993, 110561, 446047, 44727, 380733, 246933, 320283,
    259667, 313171, 307877, 498659, 369629, 382795, 233291, 503271, 236669, 451281,
    517257, 180291, 186613, 331481, 487085, 427909, 70661, 661, 239429, 410193,
    522557, 21083, 455269, 4565, 481763, 323253, 365757, 158517, 193295, 469623,
    242289, 442553, 488709, 420303, 151555, 339289, 37947, 66323, 499459, 87281,
    126697, 508883, 241119, 301537, 39779, 164315, 242521, 309569, 92317, 16541,
    169075, 405649, 68865, 133371, 472995, 161715, 408445, 431781, 347007, 16627,
    43341, 293235, 328005, 391913, 402789, 157951, 374641, 116455, 479091, 434001,
    434035, 79739, 142549, 237507, 210925, 162389, 228837, 247477, 315617, 346365,
    47207, 167439, 396005, 374115, 286879, 385, 221261, 157281, 307311, 469771,
    13813, 307393, 261209, 397203, 314125, 373317, 230179, 253641, 229057, 451969,
    386679, 90819, 444013, 269043, 475501, 132587, 287719, 89359, 217833, 304275,
    408981, 277515, 465275, 122287, 420485, 204893, 485847, 335899, 197479, 131951,
    489045, 116391, 182133, 132935, 260647, 470223, 24317, 370505, 300645, 221855,
    95761, 228733, 287833, 389923, 313019, 295237, 381513, 196435, 15297, 294871,
    267369, 117033, 110951, 402061, 322613, 508607, 310683, 245311, 212345, 213887,
    242907, 189185, 52609, 63933, 214337, 322033, 267229, 421453, 6973, 84411,
    504749, 445067, 183923, 459639, 199471, 460365, 140433, 355647, 299899, 487325,
    362609, 105365, 459579, 481643, 147665, 306379, 368397, 34909, 469315, 104801,
    410927, 175983, 434559, 254987, 411307, 426343, 462991, 174309, 200421, 225891,
    218575, 52419, 382181, 302103, 242249, 468593, 459953, 15831, 74367, 203123,
    352331, 2005, 190473, 245795, 298933, 27529, 132969, 133047, 375829, 333711,
    14119, 145605, 121537, 64059, 403317, 452145, 93347, 417051, 438969, 314237,
    33733, 514883, 132369, 305087, 50959, 6337, 451059, 44985, 142405, 47877,
    223185, 431527, 416269, 177905, 104629, 121643, 111869, 180353, 284651, 79301,
    60863, 91103, 260269, 230541, 374483, 412137, 455965, 249339, 97557, 140627,
    135139, 173453, 123149, 141603, 192959, 370693, 18775, 291473, 385945, 275749,
    496805, 8101, 79711, 311263, 426829, 157149, 37451, 143299, 186791, 209431,
    524243, 74461, 55645, 135181, 315485, 502423, 474101, 237307, 310243, 350465,
    10019, 504175, 337413, 113193, 363299, 295729, 310337, 166319, 432275, 166973,
    339435, 12247, 447019, 380275, 194937, 128651, 143805, 178135, 327333, 226949,
    504321, 364595, 78335, 479411, 229765, 159241, 204819, 349963, 198305, 410643,
    73239, 13693, 422801, 388511, 191007, 346475, 435997, 70713, 356555, 432927,
    64895, 247217, 450335, 101675, 45787, 386437, 514125, 110117, 272779, 448801,
    235571, 29195, 20745, 186335, 36895, 122491, 394385, 410515, 38815, 188947,
    284779, 268037, 336379, 334445, 345131, 387203, 103939, 356691, 412439, 197791,
    214179, 330283, 13415, 399359, 350885, 188877, 99061, 488839, 239833, 114249,
    123727, 481273, 328851, 289745, 380837, 2529, 188891, 62413, 403801, 9985,
    310643, 496949, 36107, 284497, 164259, 491755, 281677, 449805, 482373, 300299,
    416795, 379247, 215901, 424107, 63211, 180719, 259389, 155667, 298797, 33981,
    183927, 241719, 319255, 194057, 65251, 293893, 487781, 104299, 62957, 192351,
    249741, 231127, 291341, 374771, 198513, 152229, 493687, 247777, 133951, 483219,
    131327, 442749, 365247, 26349, 364135, 53985, 271773, 272979, 401987, 323297,
    322967, 178989, 372741, 355981, 489943, 359819, 323785, 315067, 340603, 293149,
    144065, 179791, 353571, 359391, 263865, 237627, 391821, 128613, 22741, 202125,
    496305, 347621, 280839, 453131, 125859, 335319, 328921, 261875, 475275, 42949,
    83187, 277481, 513825, 177693, 217725, 131305, 7415, 416971, 165421, 472571,
    391313, 506561, 135019, 190013, 70753, 366987, 523515, 62497, 20667, 515797,
    185765, 276083, 225101, 354605, 299467, 475077, 251119, 309515, 370931, 279461,
    191153, 70277, 31851, 266209, 69867, 41527, 329215, 325119, 19951, 244651,
    423763, 490805, 102763, 360783, 157485, 181171, 250549, 348159, 376619, 424555,
    411083, 120849, 292387, 220143, 135245, 313547, 236925, 14541, 42625, 499187,
    492767, 463587, 437049, 150239, 340937, 109219, 5537, 404167, 27333, 457997,
    512891, 149587, 45325, 400001, 410747, 312933, 35217, 254355, 438227, 28987,
    341989, 268939, 39717, 480331, 97805, 64169, 426903, 221619, 233027, 194659,
    65033, 482401, 357965, 192877, 442829, 84845, 411581, 222481, 189141, 56321,
    259061, 287213, 228301, 67101, 441469, 504907, 286941, 34405, 115557, 438613,
    507491, 211201, 225171, 327647, 292307, 27565, 36219, 52945, 448235, 330693,
    77533, 458459, 176801, 477597, 30227, 116843, 48689, 365109, 400427, 399227,
    35919, 193531, 185437, 495707, 66497, 51829, 414757, 185531, 177869, 205659,
    278647, 6851, 241547, 411435, 193033, 149285, 330963, 191219, 483163, 151605,
    488243, 89829, 395475, 1381, 291993, 179267, 17159, 16195, 101507, 85171,
    40411, 423093, 301261, 129437, 76009, 103109, 177167, 337333, 19621, 30365,
    339997, 497917, 4367, 86245, 255867, 39757, 11037, 403117, 159581, 63219,
    60197, 176671, 234085, 340013, 360333, 443, 179475, 507459, 197457, 51877,
    458085, 470697, 423181, 29467, 71357, 452103, 381853, 350749, 33837, 141039,
    39473, 144683, 52899, 172499, 518881, 75897, 2385, 428299, 494799, 228181,
    408085, 145427, 287243, 366685, 220623, 26827, 117995, 287045, 245829, 273409,
    151837, 96073, 70805, 425149, 153789, 472299, 488189, 166709, 43605, 389917,
    43693, 165147, 125695, 510797, 474877, 114777, 352529, 200923, 266085, 124811,
    450925, 182643, 319955, 356675, 134683, 446687, 373853, 236239, 331691, 82181,
    150005, 340367, 472941, 106107, 116129, 116549, 100159, 97203, 324227, 19717,
    18373, 378173, 406703, 156321, 42837, 407291, 514159, 74829, 144851, 138323,
    111983, 233429, 168813, 9575,
)
