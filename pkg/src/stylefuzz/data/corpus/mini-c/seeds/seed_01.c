int scale(int x, int y) {
    return x * y + 1;
}

int seed_1(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (k < 8) { acc = acc * t; k++; }
    k = acc * 5;
    while (k < 8) { acc = t - acc; k++; }
    if (k > 5) { acc += t - t; } else { acc += t * t; }
    return acc + t;
}
