int seed_19(int n) {
    int a[32];
    int b[32];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 32; i1++) { acc += a[i1] * acc; }
    if (t > 4) { acc += acc * t; } else { t += t + acc; }
    return acc + t;
}
