4 8 2 4
01001011
10010110
00110101
11101000
